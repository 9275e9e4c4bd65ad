#pragma once

#include <functional>
#include <vector>

#include "htev/fixedpoint.hpp"
#include "htev/philib.hpp"

namespace htev {

struct EtaSchedule {
    std::vector<double> etas = {0.2, 0.1, 0.05};  // strictly decreasing, positive
    int order = 1;                                 // polynomial degree of the eta -> 0 fit (1 or 2)

    void validate() const;
};

// value at eta = 0 of a least-squares polynomial fit, plus the fit residual
struct Extrapolation {
    double value = 0.0;
    double residual = 0.0;
    std::vector<double> per_eta;
};

Extrapolation extrapolate_eta(const EtaSchedule& schedule, const std::vector<double>& values);

using CauchyFn = std::function<cplx(cplx)>;

enum class InversionPath {
    Horizontal,  // adaptive quadrature of Im K along E + i eta, E in [-E_window, lambda]
    Vertical     // the same integral moved onto the half-line lambda + i y, y >= eta
};

struct InversionOptions {
    InversionPath path = InversionPath::Horizontal;
    double tolerance = 1e-9;  // relative tolerance of the adaptive rule
    int vertical_order = 8;   // Gauss-Legendre points per vertical segment
    double vertical_top = 16.0;
};

// (1/pi) int_{-inf}^{lambda} Im K(E + i eta) dE, extrapolated to eta = 0.
// K must decay like |z|^{-2} for the vertical path.
Extrapolation invert_cauchy_cdf_ex(const CauchyFn& K, double lambda, const EtaSchedule& schedule, double E_window,
                                   const InversionOptions& opt = {});
double invert_cauchy_cdf(const CauchyFn& K, double lambda, const EtaSchedule& schedule, double E_window,
                         const InversionOptions& opt = {});

// shared vertical nodes: segments [eta_k, eta_{k-1}], geometric segments up to
// `top`, and the tail [top, inf) through y = top / v
struct VerticalRule {
    std::vector<double> y, w;
    std::vector<int> level;  // node belongs to the integral for etas[j] iff level <= j
};

VerticalRule vertical_rule(const EtaSchedule& schedule, int order, double top);

struct SpectralCdf {
    std::vector<double> lambda;
    std::vector<double> raw;     // extrapolated values before clipping
    std::vector<double> value;   // clipped and monotone
    double max_adjustment = 0.0; // largest change made by the isotonic pass
    double fit_residual = 0.0;   // largest eta-fit residual
};

SpectralCdf spectral_cdf(const PhiModel& model, const std::vector<double>& lambda_grid,
                         const EtaSchedule& schedule = {}, const SolverConfig& cfg = {});

struct PhiInterval {
    double lo, hi;
};

struct PhiJump {
    double lambda;
    double size;
};

struct PhiSet {
    std::vector<PhiInterval> intervals;
    std::vector<PhiJump> jumps;
};

// closure of the range of F; atoms are steps that stand out from their neighbours
PhiSet e_phi_set(const std::vector<double>& lambda_grid, const std::vector<double>& F, double jump_threshold = 0.01);

// E[H_{s,z} H_{s',z'}]
using CovHandle = std::function<cplx(double, cplx, double, cplx)>;

struct CovCResult {
    double value = 0.0;
    double fit_residual = 0.0;
    std::vector<double> per_eta;
};

// Cov(C_{s,lambda}, C_{s',lambda'}) from the covariance of H, on the vertical path
CovCResult cov_C_from_H_ex(const CovHandle& cov, double s, double lambda, double sp, double lambdap,
                           const EtaSchedule& schedule = {}, const InversionOptions& opt = {});
double cov_C_from_H(const CovHandle& cov, double s, double lambda, double sp, double lambdap,
                    const EtaSchedule& schedule = {}, const InversionOptions& opt = {});

// handle backed by the limiting covariance of the fixed-point solver
CovHandle limit_cov_handle(const PhiModel& model, const SolverConfig& cfg = {}, const LimitCovOptions& opt = {});

}  // namespace htev
