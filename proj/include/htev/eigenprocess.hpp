#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "htev/ensembles.hpp"

namespace htev {

struct SpectralDecomposition {
    int n = 0;
    Eigen::VectorXd eigenvalues;  // ascending
    Eigen::MatrixXd overlaps;     // w_ij = u_ij^2, row i = coordinate, column j = eigenvector
    Eigen::MatrixXd vectors;      // may be empty for overlap-only decompositions
    int degenerate_clusters = 0;
};

inline constexpr double kDefaultDegeneracyTol = 1e-10;

// Full symmetric eigendecomposition. Eigenvectors inside numerically
// degenerate clusters are rotated by a Haar orthogonal matrix drawn from
// rotation_key, which makes the rows of [u_ij^2] exchangeable.
SpectralDecomposition decompose(const SymmetricMatrix& m, double degeneracy_tol = kDefaultDegeneracyTol,
                                std::uint64_t rotation_key = 0);

// Wrap a bistochastic matrix (permutation baseline) without an eigensolve.
// Eigenvalues are set to j/n placeholders so C^n reduces to B^n.
SpectralDecomposition from_overlaps(const Eigen::MatrixXd& w);

// Sample and decompose in one go; PermutationBaseline bypasses the eigensolver.
SpectralDecomposition sample_decomposition(const EnsembleSpec& spec, int n, std::uint64_t replicate);

struct ProcessSurface {
    std::vector<double> s_grid;
    std::vector<double> t_grid;  // t values, or lambda values when on_lambda
    bool on_lambda = false;
    Eigen::MatrixXd values;      // rows follow s_grid, columns t_grid

    double at(double s, double t) const;
};

// number of indices i with i <= n s, i.e. floor(n s) guarded against round-off
int row_count(int n, double s);

ProcessSurface bivariate_process(const SpectralDecomposition& dec, const std::vector<double>& s_grid,
                                 const std::vector<double>& t_grid);
ProcessSurface eigenvalue_process(const SpectralDecomposition& dec, const std::vector<double>& s_grid,
                                  const std::vector<double>& lambda_grid);

double bivariate_value(const SpectralDecomposition& dec, double s, double t);
double eigenvalue_value(const SpectralDecomposition& dec, double s, double lambda);

double empirical_cdf(const SpectralDecomposition& dec, double lambda);
int count_below(const SpectralDecomposition& dec, double lambda);

struct ResolventStat {
    double s;
    cplx z;
    cplx value;
};

ResolventStat resolvent_stat(const SpectralDecomposition& dec, double s, cplx z);
// n^{-1/2} (Tr(P_s G) - s_n Tr G) with G = (z - A)^{-1} by direct inversion
cplx resolvent_stat_trace(const SymmetricMatrix& m, double s, cplx z);

// |int C^n_{s,l} / (z - l)^2 dl + X^n(s,z)| with exact piecewise integration
double quadrature_identity_check(const SpectralDecomposition& dec, double s, cplx z, int grid_resolution = 0);

double increment(const ProcessSurface& surf, double s, double sp, double t, double tp);

struct SpectralAtom {
    double lambda;
    double weight;
};
std::vector<SpectralAtom> vector_spectral_measure(const SpectralDecomposition& dec, int row);

// column sums of (w_ij - 1/n) over i < row_count(n, s): c_j
Eigen::VectorXd partial_column_excess(const SpectralDecomposition& dec, double s);

}  // namespace htev
