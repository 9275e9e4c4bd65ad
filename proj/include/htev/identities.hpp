#pragma once

#include <vector>

#include <Eigen/Dense>

#include "htev/ensembles.hpp"

namespace htev {

struct SchurResult {
    cplx lhs;
    cplx rhs;
    double bound;     // 5 |P|_inf / |Im z|
    bool bound_ok;
};

// Tr(PG) - Tr(P^(k) G^(k)) by direct inversion versus the Schur formula.
// k is 0-based.
SchurResult schur_trace_delta(const SymmetricMatrix& a, const Eigen::VectorXd& p_diag, int k, cplx z);

struct ProdExpResult {
    double gap;
    double bound;
    bool applicable;
    bool bound_ok;
};

// radius R with |log(1+z) - z| <= |z|^2 on |z| <= R
double product_exp_radius();

ProdExpResult prod_exp_gap(const std::vector<cplx>& u, int n);

}  // namespace htev
