#pragma once

#include <functional>
#include <vector>

#include "htev/ensembles.hpp"

namespace htev {

struct PhiModel {
    EnsembleKind kind = EnsembleKind::ErdosRenyi;
    double alpha = 1.0;
    double sigma = 1.0;  // sigma of Phi itself (for Levy: Gamma(1 - a/2) sigma_entries^a)
    double p = 0.0;
    // Exploding-moments view used by ER and Gaussian too: m = sum w delta_x
    std::vector<Atom> atoms;
    cplx C_alpha = 0.0;
    double gamma = 0.0;
    double kappa = 0.0;
    double K = 1.0;

    static PhiModel from_spec(const EnsembleSpec& spec);
    // Levy with an explicit sigma for Phi
    static PhiModel levy(double alpha, double sigma_phi);
    static PhiModel atomic(std::vector<Atom> atoms);
    static PhiModel erdos_renyi(double p);
    static PhiModel gaussian(double sigma);
    // g = 0, Phi = 0
    static PhiModel degenerate();

    bool is_levy() const { return kind == EnsembleKind::Levy; }
    // g oscillates (Bessel) when some atom has x > 0
    bool oscillatory() const;
    double max_atom() const;
};

cplx phi_eval(const PhiModel& model, cplx lambda);
double g_eval(const PhiModel& model, double y);

struct KernelTauTilde {
    std::function<double(double, double)> density;
    std::function<double(double)> mu_density;
    std::vector<Atom> atoms;
};

KernelTauTilde kernel_tau_tilde(const PhiModel& model);

// int_0^inf g(y) e^{i y w} dy for Im w > 0, by graded panel quadrature
cplx integrate_g_exp(const PhiModel& model, cplx w);

// iint e^{i(x v + y v')} d tau~ for x, y in the upper half-plane, by
// tensor-product quadrature of the densities; should equal Phi(1/x + 1/y)
cplx kernel_identity_rhs(const KernelTauTilde& ker, cplx x, cplx y, int panels = 60);

// sigma of Phi for Levy entries with scale sigma_entries
double levy_phi_sigma(double alpha, double sigma_entries);

// Monte Carlo calibration of the same constant at lambda = -i
struct LevyCalibration {
    double sigma;
    double std_err;
};
LevyCalibration calibrate_levy_sigma(const EnsembleSpec& spec, int n, int n_samples);

}  // namespace htev
