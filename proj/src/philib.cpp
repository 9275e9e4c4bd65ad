#include "htev/philib.hpp"

#include <algorithm>
#include <cmath>

#include "htev/bessel.hpp"
#include "htev/errors.hpp"
#include "htev/quadrature.hpp"

namespace htev {

namespace {
const cplx I(0.0, 1.0);

void check_bessel() {
    if (bessel_switch_gap() > 1e-10) throw NumericError("Bessel J1 branches disagree at the switch point");
}
}  // namespace

double levy_phi_sigma(double alpha, double sigma_entries) {
    return std::tgamma(1.0 - 0.5 * alpha) * std::pow(sigma_entries, alpha);
}

PhiModel PhiModel::levy(double alpha, double sigma_phi) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("Levy alpha must lie in (0,2)");
    if (!(sigma_phi > 0.0)) throw ParameterError("sigma must be positive");
    PhiModel m;
    m.kind = EnsembleKind::Levy;
    m.alpha = alpha;
    m.sigma = sigma_phi;
    // real constant, so that int g(y) e^{iy/l} dy = -sigma (i l)^{a/2}
    m.C_alpha = -sigma_phi / std::tgamma(0.5 * alpha);
    m.gamma = 0.5 * alpha - 1.0;
    m.kappa = 0.5 * alpha - 1.0;
    m.K = std::abs(m.C_alpha) * 1.01;
    return m;
}

PhiModel PhiModel::atomic(std::vector<Atom> atoms) {
    check_bessel();
    PhiModel m;
    m.kind = EnsembleKind::ExplodingMoments;
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.weight >= 0.0) || !(a.location >= 0.0)) throw ParameterError("invalid atom");
        total += a.weight;
    }
    m.atoms = std::move(atoms);
    m.gamma = 0.0;
    m.kappa = 0.0;
    // |J1(2 sqrt u)/sqrt u| <= 1
    m.K = std::max(total, 1e-300) * 1.01;
    return m;
}

PhiModel PhiModel::erdos_renyi(double p) {
    if (!(p > 0.0)) throw ParameterError("p must be positive");
    PhiModel m = atomic({{p, 1.0}});
    m.kind = EnsembleKind::ErdosRenyi;
    m.p = p;
    return m;
}

PhiModel PhiModel::gaussian(double sigma) {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be positive");
    PhiModel m = atomic({{sigma * sigma, 0.0}});
    m.kind = EnsembleKind::GaussianBaseline;
    m.sigma = sigma;
    return m;
}

PhiModel PhiModel::degenerate() {
    PhiModel m;
    m.kind = EnsembleKind::ExplodingMoments;
    m.K = 1e-300;
    return m;
}

PhiModel PhiModel::from_spec(const EnsembleSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case EnsembleKind::Levy: return levy(spec.alpha, levy_phi_sigma(spec.alpha, spec.sigma));
        case EnsembleKind::ErdosRenyi: return erdos_renyi(spec.p);
        case EnsembleKind::GaussianBaseline: return gaussian(spec.sigma);
        case EnsembleKind::ExplodingMoments: return atomic(spec.m_atoms);
        case EnsembleKind::PermutationBaseline: break;
    }
    throw UnsupportedError("PermutationBaseline has no characteristic exponent");
}

bool PhiModel::oscillatory() const {
    for (const auto& a : atoms)
        if (a.location > 0.0 && a.weight > 0.0) return true;
    return false;
}

double PhiModel::max_atom() const {
    double x = 0.0;
    for (const auto& a : atoms)
        if (a.weight > 0.0) x = std::max(x, a.location);
    return x;
}

cplx phi_eval(const PhiModel& model, cplx lambda) {
    if (lambda.imag() > 0.0) throw DomainError("phi_eval needs Im lambda <= 0");
    if (lambda == cplx(0.0)) return 0.0;
    if (model.is_levy()) {
        cplx il = I * lambda;
        if (il.imag() == 0.0 && il.real() < 0.0) throw DomainError("Levy Phi: branch cut hit");
        return -model.sigma * std::pow(il, 0.5 * model.alpha);
    }
    cplx sum = 0.0;
    for (const auto& a : model.atoms) {
        if (a.location == 0.0)
            sum += a.weight * (-I * lambda);
        else
            sum += a.weight * (std::exp(-I * lambda * a.location) - 1.0) / a.location;
    }
    return sum;
}

double g_eval(const PhiModel& model, double y) {
    if (!(y > 0.0)) throw DomainError("g_eval needs y > 0");
    if (model.is_levy()) return model.C_alpha.real() * std::pow(y, 0.5 * model.alpha - 1.0);
    double sum = 0.0;
    for (const auto& a : model.atoms) sum -= a.weight * bessel_j1_ratio(a.location * y);
    return sum;
}

KernelTauTilde kernel_tau_tilde(const PhiModel& model) {
    if (model.is_levy())
        throw UnsupportedError("the Levy bivariate kernel has a singular density; not supported");
    KernelTauTilde k;
    k.atoms = model.atoms;
    auto atoms = model.atoms;
    // J1(2 sqrt(vx)) J1(2 sqrt(v'x)) / sqrt(vv') = x j(vx) j(v'x) with j(u) = J1(2 sqrt u)/sqrt u
    k.density = [atoms](double v, double vp) {
        double s = 0.0;
        for (const auto& a : atoms)
            if (a.location > 0.0)
                s += a.weight * a.location * bessel_j1_ratio(v * a.location) *
                     bessel_j1_ratio(vp * a.location);
        return s;
    };
    k.mu_density = [atoms](double v) {
        double s = 0.0;
        for (const auto& a : atoms) s -= a.weight * bessel_j1_ratio(v * a.location);
        return s;
    };
    return k;
}

namespace {

// Quadrature rule for int_0^inf f(y) e^{iyw} dy where f ~ y^gamma at 0 and
// oscillates like sqrt(xmax y). Geometric grading near 0 when gamma < 0.
Rule half_line_rule(cplx w, double gamma, double xmax, double eps) {
    double decay = w.imag();
    double T = -std::log(eps) / decay;
    Rule r;
    double start = 0.0;
    double first = std::min(1.0, T) * 0.5;
    if (gamma < 0.0) {
        double lo = 1e-16;
        double a = lo;
        while (a < first) {
            double b = std::min(first, a * 4.0);
            r.add_panel(a, b, 16);
            a = b;
        }
        start = first;
    }
    // phase per panel below ~pi/2
    double a = start;
    while (a < T) {
        double rate = std::abs(w.real()) + decay + (xmax > 0 ? std::sqrt(xmax / std::max(a, 1e-12)) : 0.0);
        double len = std::min(2.0, 1.5 / rate);
        if (a == 0.0 && xmax > 0) len = std::min(len, 1.0 / xmax);
        double b = std::min(T, a + std::max(len, 1e-6));
        r.add_panel(a, b, 16);
        a = b;
    }
    return r;
}

}  // namespace

cplx integrate_g_exp(const PhiModel& model, cplx w) {
    if (!(w.imag() > 0.0)) throw DomainError("integrate_g_exp needs Im w > 0");
    double gamma = model.is_levy() ? model.gamma : 0.0;
    Rule r = half_line_rule(w, gamma, model.max_atom(), 1e-16);
    cplx s = 0.0;
    for (std::size_t q = 0; q < r.size(); ++q) s += r.w[q] * g_eval(model, r.x[q]) * std::exp(I * w * r.x[q]);
    if (gamma < 0.0) {
        // piece [0, 1e-16] where the exponential is 1
        double lo = 1e-16;
        s += model.C_alpha.real() * std::pow(lo, gamma + 1.0) / (gamma + 1.0);
    }
    return s;
}

cplx kernel_identity_rhs(const KernelTauTilde& ker, cplx x, cplx y, int panels) {
    if (!(x.imag() > 0.0 && y.imag() > 0.0)) throw DomainError("kernel identity needs x, y in C+");
    double xmax = 0.0;
    for (const auto& a : ker.atoms) xmax = std::max(xmax, a.location);
    auto axis = [&](cplx w) {
        double T = -std::log(1e-13) / w.imag();
        Rule r = panel_rule(0.0, T, panels, 16);
        std::vector<cplx> e(r.size());
        for (std::size_t q = 0; q < r.size(); ++q) e[q] = r.w[q] * std::exp(I * w * r.x[q]);
        return std::make_pair(r, e);
    };
    auto [rx, ex] = axis(x);
    auto [ry, ey] = axis(y);
    cplx total = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        cplx row = 0.0;
        for (std::size_t j = 0; j < ry.size(); ++j) row += ker.density(rx.x[i], ry.x[j]) * ey[j];
        total += ex[i] * row;
    }
    cplx sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) sx += ex[i] * ker.mu_density(rx.x[i]);
    for (std::size_t j = 0; j < ry.size(); ++j) sy += ey[j] * ker.mu_density(ry.x[j]);
    return total + sx + sy;
}

LevyCalibration calibrate_levy_sigma(const EnsembleSpec& spec, int n, int n_samples) {
    if (spec.kind != EnsembleKind::Levy) throw ParameterError("calibration applies to Levy specs only");
    // at lambda = -i, Phi = -sigma, so sigma = -Re estimate
    auto est = estimate_char_exponent(spec, n, n_samples, {cplx(0.0, -1.0)});
    return {-est[0].value.real(), est[0].stderr_re};
}

}  // namespace htev
