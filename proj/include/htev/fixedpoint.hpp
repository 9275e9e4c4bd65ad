#pragma once

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "htev/philib.hpp"

namespace htev {

struct SolverConfig {
    int nodes = 160;             // minimum number of quadrature nodes on (0, T]
    int panel_order = 16;        // Gauss-Legendre points per panel
    double phase_per_panel = 10.0; // max oscillation phase (radians) per panel
    double truncation = 0.0;     // 0 = automatic, e^{-delta T} < truncation_eps
    double truncation_eps = 1e-12;
    double damping = 1.0;        // in (0, 1]
    int max_iterations = 3000;
    double tolerance = 1e-9;     // sup-norm residual
    int anderson_depth = 6;
    double continuation_start = 8.0;
    double continuation_ratio = 0.5;
    int max_nodes = 6000;

    void validate() const;
};

// Quadrature nodes on (0, T] and the z-independent Nystrom kernel
// W(i, q) = y_i g(y_i y_q) w_q.
struct Discretization {
    PhiModel model;
    std::vector<double> y;
    std::vector<double> w;
    double T = 0.0;
    double y_lo = 0.0;   // start of the graded region (Levy); [0, y_lo] handled in closed form
    Eigen::MatrixXd W;
    Eigen::VectorXd b;   // contribution of [0, y_lo]

    int size() const { return static_cast<int>(y.size()); }
    Eigen::RowVectorXd kernel_row(double t) const;
    double zero_piece(double t) const;
};

// decay: smallest sgn-Im of the exponents, freq: largest |Re| of the exponents
std::shared_ptr<const Discretization> make_discretization(const PhiModel& model, double decay, double freq,
                                                          const SolverConfig& cfg);

// Solution of
//   rho(t) = t int g(ty) (s e^{i sgn y zt} + 1 - s) e^{i sgn y (z - s zt)} e^{rho(y)} dy.
// Values are stored for the upper half-plane problem; for Im z < 0 the
// grid holds the conjugate problem and accessors conjugate back.
struct RhoGrid {
    std::shared_ptr<const Discretization> disc;
    cplx z = 0.0;
    cplx zt = 0.0;
    double s = 0.5;
    bool conjugated = false;
    Eigen::VectorXcd values;  // upper-half-plane frame
    Eigen::VectorXcd diag;    // (s e^{iy zt} + 1 - s) e^{iy (z - s zt)}, same frame
    double residual = 0.0;
    int iterations = 0;
    double max_real = 0.0;

    const std::vector<double>& nodes() const { return disc->y; }
    double truncation() const { return disc->T; }
    Eigen::VectorXcd node_values() const;
    cplx value_at(double t) const;
    // residual of the defining equation at an arbitrary t, in absolute value
    double residual_at(double t) const;
};

cplx normalize_sign(cplx v, bool conj);

RhoGrid solve_rho_z(const PhiModel& model, cplx z, const SolverConfig& cfg = {});
RhoGrid solve_rho_s(const PhiModel& model, cplx z, cplx zt, double s, const SolverConfig& cfg = {});

// single solve on a given discretization, warm-started from `init` (may be empty)
RhoGrid solve_rho_s_on(std::shared_ptr<const Discretization> disc, cplx z, cplx zt, double s,
                       const SolverConfig& cfg, const Eigen::VectorXcd& init);

bool in_domain(cplx z, cplx zt, double s);
double domain_delta(cplx z, cplx zt, double s);

cplx stieltjes_mu_phi(const RhoGrid& rho, cplx z);

// semicircle Stieltjes transform for variance sigma^2
cplx semicircle_stieltjes(cplx z, double sigma = 1.0);

// dz~ rho_{z,z~,s} at z~ = 0 by central differences with one Richardson step
struct RhoDerivative {
    RhoGrid base;
    Eigen::VectorXcd d_h;    // step h
    Eigen::VectorXcd d_h2;   // step h/2
    Eigen::VectorXcd d;      // Richardson combination
    double h = 0.0;
};

RhoDerivative rho_derivative(const PhiModel& model, cplx z, double s, const SolverConfig& cfg);

struct LuResult {
    cplx value;     // Richardson
    cplx value_h;   // step h only
    cplx value_h2;  // step h/2 only
};

LuResult eval_L_u(const PhiModel& model, double u, double s, cplx z, const SolverConfig& cfg = {});
LuResult eval_L_u(const RhoDerivative& der, double u);

// ---- bivariate ----

struct PairSide {
    double s;
    cplx z;
    cplx zt;
};

struct RhoPair {
    std::shared_ptr<const Discretization> d1, d2;
    double u = 0.0;
    PairSide side1{}, side2{};
    Eigen::MatrixXcd values;  // rho_u(t1_i, t2_j), actual (not conjugated) values
    Eigen::VectorXcd boundary1, boundary2;  // rho_u(t, 0) and rho_u(0, t)
    double residual = 0.0;
    int iterations = 0;
    double max_real = 0.0;
};

RhoPair solve_rho_pair(const PhiModel& model, double u, const PairSide& a, const PairSide& b,
                       const SolverConfig& cfg = {});

// on fixed discretizations with given univariate boundary solutions
RhoPair solve_rho_pair_on(const PhiModel& model, double u, const PairSide& a, const PairSide& b,
                          const RhoGrid& uni_a, const RhoGrid& uni_b, const SolverConfig& cfg,
                          const Eigen::MatrixXcd* init = nullptr);

// maximum nodewise residual of a pair solution
double pair_residual(const PhiModel& model, const RhoPair& p);

struct LPairResult {
    cplx value;
    cplx value_h;
    cplx value_h2;
};

LPairResult eval_L_pair(const PhiModel& model, double u, double s1, cplx z1, double s2, cplx z2,
                        const SolverConfig& cfg = {});

enum class CovRoute { LFunctional, Exchangeable };

struct LimitCovOptions {
    CovRoute route = CovRoute::LFunctional;
    int u_order = 4;         // Gauss-Legendre points per u-subinterval
    double pair_step = 1e-3; // relative step for the mixed derivative
};

cplx limit_cov(const PhiModel& model, double s, cplx z, double sp, cplx zp, const SolverConfig& cfg = {},
               const LimitCovOptions& opt = {});

// E[G(z1) G(z2)] - E[G(z1)] E[G(z2)] for the limiting diagonal resolvent entry
cplx resolvent_entry_cov(const PhiModel& model, cplx z1, cplx z2, const SolverConfig& cfg = {});
// same, from univariate solutions at z1 and z2 (z~ = 0)
cplx resolvent_entry_cov(const PhiModel& model, const RhoGrid& r1, const RhoGrid& r2, const SolverConfig& cfg = {});

}  // namespace htev
