#include <algorithm>
#include <array>
#include <cmath>

#include "anderson.hpp"
#include "htev/bessel.hpp"
#include "htev/errors.hpp"
#include "htev/fixedpoint.hpp"
#include "htev/quadrature.hpp"

namespace htev {

namespace {

const cplx I(0.0, 1.0);

double sgn_of(cplx z) { return z.imag() > 0 ? 1.0 : -1.0; }

// t_i sqrt(x) j(x t_i y_q) w_q with j(u) = J1(2 sqrt u)/sqrt u; the product of
// two such factors gives the tau density x j(v x) j(v' x) after v = t y
Eigen::MatrixXd tau_factor(const Discretization& d, double x) {
    const int N = d.size();
    Eigen::MatrixXd m(N, N);
    Eigen::MatrixXd jm(N, N);
    for (int q = 0; q < N; ++q)
        for (int i = q; i < N; ++i) {
            double v = bessel_j1_ratio(x * d.y[i] * d.y[q]);
            jm(i, q) = v;
            jm(q, i) = v;
        }
    double sx = std::sqrt(x);
    for (int q = 0; q < N; ++q)
        for (int i = 0; i < N; ++i) m(i, q) = d.y[i] * sx * jm(i, q) * d.w[q];
    return m;
}

Eigen::VectorXcd axis_exp(const Discretization& d, double sgn, cplx w) {
    Eigen::VectorXcd v(d.size());
    for (int q = 0; q < d.size(); ++q) v(q) = std::exp(I * sgn * d.y[q] * w);
    return v;
}

Eigen::VectorXcd apply_real(const Eigen::MatrixXd& W, const Eigen::VectorXcd& v) {
    Eigen::VectorXcd out(v.size());
    out.real() = W * v.real();
    out.imag() = W * v.imag();
    return out;
}

// K1 M K2^T for real K and complex M
Eigen::MatrixXcd sandwich(const Eigen::MatrixXd& K1, const Eigen::MatrixXcd& M, const Eigen::MatrixXd& K2) {
    // contiguous copies keep both products on the blocked kernel
    Eigen::MatrixXd mr = M.real(), mi = M.imag();
    Eigen::MatrixXd tr = K1 * mr, ti = K1 * mi;
    Eigen::MatrixXd re = tr * K2.transpose(), im = ti * K2.transpose();
    Eigen::MatrixXcd out(re.rows(), re.cols());
    out.real() = re;
    out.imag() = im;
    return out;
}

struct PairSystem {
    Eigen::MatrixXcd S;        // sum_beta gamma_beta e1beta(i) e2beta(j)
    Eigen::MatrixXcd constant; // mu lines and univariate corrections
    std::vector<double> weights;
    std::vector<Eigen::MatrixXd> K1, K2;
};

PairSystem build_system(const PhiModel& model, double u, const PairSide& a, const PairSide& b,
                        const Discretization& d1, const Discretization& d2, const Eigen::VectorXcd& rho1,
                        const Eigen::VectorXcd& rho2) {
    const double sg1 = sgn_of(a.z), sg2 = sgn_of(b.z);
    const double s1 = a.s, s2 = b.s;
    Eigen::VectorXcd f1 = rho1.array().exp().matrix(), f2 = rho2.array().exp().matrix();

    // share of coupled rows j <= k that fall in each block of indices
    const std::array<double, 3> gam = {std::min(u, s1), std::min(u, s2) - std::min(u, s1), u - std::min(u, s2)};

    PairSystem sys;
    sys.S = Eigen::MatrixXcd::Zero(d1.size(), d2.size());
    Eigen::VectorXcd line1 = Eigen::VectorXcd::Zero(d1.size()), line2 = Eigen::VectorXcd::Zero(d2.size());
    for (int beta = 1; beta <= 3; ++beta) {
        double g = gam[beta - 1];
        if (g <= 0.0) continue;
        cplx w1 = a.z + a.zt * ((beta <= 1 ? 1.0 : 0.0) - s1);
        cplx w2 = b.z + b.zt * ((beta <= 2 ? 1.0 : 0.0) - s2);
        Eigen::VectorXcd e1 = axis_exp(d1, sg1, w1), e2 = axis_exp(d2, sg2, w2);
        sys.S += g * e1 * e2.transpose();
        // mu (x) delta_0 and delta_0 (x) mu lines, where rho_u reduces to the boundary
        line1 += g * apply_real(d1.W, e1.cwiseProduct(f1));
        line2 += g * apply_real(d2.W, e2.cwiseProduct(f2));
    }
    auto correction = [&](const Discretization& d, double sg, const PairSide& side, const Eigen::VectorXcd& f) {
        Eigen::VectorXcd v(d.size());
        for (int q = 0; q < d.size(); ++q) {
            double y = d.y[q];
            cplx coef = std::max(side.s - u, 0.0) * std::exp(I * y * sg * side.zt) + 1.0 - std::max(side.s, u);
            v(q) = coef * std::exp(I * y * sg * (side.z - side.s * side.zt)) * f(q);
        }
        return apply_real(d.W, v);
    };
    line1 += correction(d1, sg1, a, f1);
    line2 += correction(d2, sg2, b, f2);
    sys.constant = line1.replicate(1, d2.size()) + line2.transpose().replicate(d1.size(), 1);

    for (const auto& at : model.atoms) {
        if (at.location <= 0.0 || at.weight == 0.0) continue;
        sys.weights.push_back(at.weight);
        sys.K1.push_back(tau_factor(d1, at.location));
        sys.K2.push_back(tau_factor(d2, at.location));
    }

    return sys;
}

Eigen::MatrixXcd apply_system(const PairSystem& sys, const Eigen::MatrixXcd& V) {
    Eigen::MatrixXcd M = sys.S.cwiseProduct(V.array().exp().matrix());
    Eigen::MatrixXcd out = sys.constant;
    for (std::size_t k = 0; k < sys.weights.size(); ++k) out += sys.weights[k] * sandwich(sys.K1[k], M, sys.K2[k]);
    return out;
}

}  // namespace

RhoPair solve_rho_pair_on(const PhiModel& model, double u, const PairSide& a, const PairSide& b,
                          const RhoGrid& uni_a, const RhoGrid& uni_b, const SolverConfig& cfg,
                          const Eigen::MatrixXcd* init) {
    cfg.validate();
    if (model.is_levy()) throw UnsupportedError("bivariate equation is not available for the Levy kernel");
    if (!(u >= 0.0 && u <= 1.0)) throw ParameterError("u must lie in [0, 1]");
    if (!(a.s > 0.0 && a.s < 1.0 && b.s > 0.0 && b.s < 1.0)) throw ParameterError("s must lie in (0, 1)");
    if (!in_domain(a.z, a.zt, a.s) || !in_domain(b.z, b.zt, b.s))
        throw DomainError("a side is outside its admissible domain");
    if (a.s > b.s) {
        // symmetry of rho_u under exchange of the two sides
        Eigen::MatrixXcd tinit;
        if (init) tinit = init->transpose();
        RhoPair p = solve_rho_pair_on(model, u, b, a, uni_b, uni_a, cfg, init ? &tinit : nullptr);
        std::swap(p.d1, p.d2);
        std::swap(p.side1, p.side2);
        std::swap(p.boundary1, p.boundary2);
        p.values.transposeInPlace();
        return p;
    }
    const Discretization& d1 = *uni_a.disc;
    const Discretization& d2 = *uni_b.disc;
    Eigen::VectorXcd rho1 = uni_a.node_values(), rho2 = uni_b.node_values();
    PairSystem sys = build_system(model, u, a, b, d1, d2, rho1, rho2);

    const int n1 = d1.size(), n2 = d2.size();
    Eigen::MatrixXcd X0;
    if (init && init->rows() == n1 && init->cols() == n2)
        X0 = *init;
    else
        X0 = rho1.replicate(1, n2) + rho2.transpose().replicate(n1, 1);
    Eigen::VectorXcd x = Eigen::Map<Eigen::VectorXcd>(X0.data(), X0.size());

    auto F = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        Eigen::Map<const Eigen::MatrixXcd> V(v.data(), n1, n2);
        Eigen::MatrixXcd out = apply_system(sys, V);
        return Eigen::Map<Eigen::VectorXcd>(out.data(), out.size());
    };
    auto [res, iters] = detail::fixed_point(x, F, cfg, cfg.tolerance);

    RhoPair p;
    p.d1 = uni_a.disc;
    p.d2 = uni_b.disc;
    p.u = u;
    p.side1 = a;
    p.side2 = b;
    // x may have been reallocated by the iteration
    p.values = Eigen::Map<Eigen::MatrixXcd>(x.data(), n1, n2);
    p.boundary1 = rho1;
    p.boundary2 = rho2;
    p.residual = res;
    p.iterations = iters;
    p.max_real = p.values.real().maxCoeff();
    return p;
}

RhoPair solve_rho_pair(const PhiModel& model, double u, const PairSide& a, const PairSide& b,
                       const SolverConfig& cfg) {
    if (model.is_levy()) throw UnsupportedError("bivariate equation is not available for the Levy kernel");
    RhoGrid ua = solve_rho_s(model, a.z, a.zt, a.s, cfg);
    RhoGrid ub = solve_rho_s(model, b.z, b.zt, b.s, cfg);
    return solve_rho_pair_on(model, u, a, b, ua, ub, cfg);
}

double pair_residual(const PhiModel& model, const RhoPair& p) {
    if (p.side1.s > p.side2.s) {
        RhoPair q = p;
        std::swap(q.d1, q.d2);
        std::swap(q.side1, q.side2);
        std::swap(q.boundary1, q.boundary2);
        q.values.transposeInPlace();
        return pair_residual(model, q);
    }
    PairSystem sys = build_system(model, p.u, p.side1, p.side2, *p.d1, *p.d2, p.boundary1, p.boundary2);
    return (apply_system(sys, p.values) - p.values).cwiseAbs().maxCoeff();
}

namespace {

struct Prepared {
    std::array<RhoGrid, 2> base;
    std::array<std::array<RhoGrid, 4>, 2> off;  // +h, -h, +h/2, -h/2
    std::array<double, 2> h{};
    std::array<PairSide, 2> side;
};

Prepared prepare(const PhiModel& model, double s1, cplx z1, double s2, cplx z2, const SolverConfig& tight,
                 double step) {
    Prepared pr;
    pr.side = {PairSide{s1, z1, 0.0}, PairSide{s2, z2, 0.0}};
    for (int r = 0; r < 2; ++r) {
        const PairSide& sd = pr.side[r];
        pr.base[r] = solve_rho_s(model, sd.z, 0.0, sd.s, tight);
        pr.h[r] = step * std::max(1.0, std::abs(sd.z));
        const std::array<double, 4> offs = {pr.h[r], -pr.h[r], 0.5 * pr.h[r], -0.5 * pr.h[r]};
        for (int k = 0; k < 4; ++k) {
            // warm start in the solver's own frame
            pr.off[r][k] = solve_rho_s_on(pr.base[r].disc, sd.z, offs[k], sd.s, tight, pr.base[r].values);
        }
    }
    return pr;
}

LPairResult l_pair_from(const PhiModel& model, double u, const Prepared& pr, const SolverConfig& tight) {
    const PairSide& a = pr.side[0];
    const PairSide& b = pr.side[1];
    RhoPair center = solve_rho_pair_on(model, u, a, b, pr.base[0], pr.base[1], tight);
    auto corners = [&](int k) {
        // k = 0 uses step h, k = 1 uses h/2
        const double h1 = k == 0 ? pr.h[0] : 0.5 * pr.h[0];
        const double h2 = k == 0 ? pr.h[1] : 0.5 * pr.h[1];
        std::array<Eigen::MatrixXcd, 4> v;  // (+,+), (+,-), (-,+), (-,-)
        const int ip = 2 * k, im = 2 * k + 1;
        const std::array<std::pair<int, int>, 4> idx = {{{ip, ip}, {ip, im}, {im, ip}, {im, im}}};
        const std::array<std::pair<double, double>, 4> sg = {{{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};
        for (int c = 0; c < 4; ++c) {
            PairSide sa{a.s, a.z, sg[c].first * h1}, sb{b.s, b.z, sg[c].second * h2};
            v[c] = solve_rho_pair_on(model, u, sa, sb, pr.off[0][idx[c].first], pr.off[1][idx[c].second], tight,
                                     &center.values)
                       .values;
        }
        struct D {
            Eigen::MatrixXcd d1, d2, d12;
        } out;
        out.d1 = (v[0] + v[1] - v[2] - v[3]) / (4.0 * h1);
        out.d2 = (v[0] - v[1] + v[2] - v[3]) / (4.0 * h2);
        out.d12 = (v[0] - v[1] - v[2] + v[3]) / (4.0 * h1 * h2);
        return out;
    };
    auto Dh = corners(0);
    auto Dh2 = corners(1);
    const Discretization& d1 = *pr.base[0].disc;
    const Discretization& d2 = *pr.base[1].disc;
    const double sg1 = sgn_of(a.z), sg2 = sgn_of(b.z);
    const double c1 = (u <= a.s ? 1.0 : 0.0) - a.s;
    const double c2 = (u <= b.s ? 1.0 : 0.0) - b.s;
    auto integrate = [&](const Eigen::MatrixXcd& r1, const Eigen::MatrixXcd& r2, const Eigen::MatrixXcd& r12) {
        cplx acc = 0.0;
        for (int j = 0; j < d2.size(); ++j) {
            double t2 = d2.y[j];
            cplx e2 = std::exp(I * sg2 * t2 * b.z);
            for (int i = 0; i < d1.size(); ++i) {
                double t1 = d1.y[i];
                cplx e = std::exp(I * sg1 * t1 * a.z + center.values(i, j)) * e2;
                cplx p1 = I * sg1 * t1 * c1 + r1(i, j);
                cplx p2 = I * sg2 * t2 * c2 + r2(i, j);
                acc += d1.w[i] * d2.w[j] * e * (r12(i, j) + p1 * p2) / (t1 * t2);
            }
        }
        return acc;
    };
    LPairResult res;
    res.value_h = integrate(Dh.d1, Dh.d2, Dh.d12);
    res.value_h2 = integrate(Dh2.d1, Dh2.d2, Dh2.d12);
    res.value = (4.0 * res.value_h2 - res.value_h) / 3.0;
    return res;
}

SolverConfig tighten(const SolverConfig& cfg) {
    SolverConfig t = cfg;
    t.tolerance = std::min(cfg.tolerance, 1e-13);
    return t;
}

}  // namespace

LPairResult eval_L_pair(const PhiModel& model, double u, double s1, cplx z1, double s2, cplx z2,
                        const SolverConfig& cfg) {
    if (model.is_levy()) throw UnsupportedError("bivariate equation is not available for the Levy kernel");
    if (z1.imag() == 0.0 || z2.imag() == 0.0) throw DomainError("L pair needs non-real z");
    SolverConfig tight = tighten(cfg);
    Prepared pr = prepare(model, s1, z1, s2, z2, tight, LimitCovOptions{}.pair_step);
    return l_pair_from(model, u, pr, tight);
}

cplx resolvent_entry_cov(const PhiModel& model, const RhoGrid& r1, const RhoGrid& r2, const SolverConfig& cfg) {
    if (model.is_levy()) throw UnsupportedError("bivariate equation is not available for the Levy kernel");
    if (r1.zt != cplx(0.0) || r2.zt != cplx(0.0)) throw ParameterError("resolvent covariance needs grids at z~ = 0");
    const cplx z1 = normalize_sign(r1.z, r1.conjugated), z2 = normalize_sign(r2.z, r2.conjugated);
    // at u = 1 and z~ = 0 every row is coupled and the blocks coincide
    PairSide a{0.5, z1, 0.0}, b{0.5, z2, 0.0};
    RhoPair p = solve_rho_pair_on(model, 1.0, a, b, r1, r2, cfg);
    const Discretization& d1 = *r1.disc;
    const Discretization& d2 = *r2.disc;
    const double sg1 = sgn_of(z1), sg2 = sgn_of(z2);
    cplx acc = 0.0;
    for (int j = 0; j < d2.size(); ++j) {
        cplx e2 = std::exp(I * sg2 * d2.y[j] * z2);
        for (int i = 0; i < d1.size(); ++i)
            acc += d1.w[i] * d2.w[j] * std::exp(I * sg1 * d1.y[i] * z1 + p.values(i, j)) * e2;
    }
    cplx egg = (-I * sg1) * (-I * sg2) * acc;
    return egg - stieltjes_mu_phi(r1, z1) * stieltjes_mu_phi(r2, z2);
}

cplx resolvent_entry_cov(const PhiModel& model, cplx z1, cplx z2, const SolverConfig& cfg) {
    if (model.is_levy()) throw UnsupportedError("bivariate equation is not available for the Levy kernel");
    if (z1.imag() == 0.0 || z2.imag() == 0.0) throw DomainError("resolvent covariance needs non-real z");
    return resolvent_entry_cov(model, solve_rho_z(model, z1, cfg), solve_rho_z(model, z2, cfg), cfg);
}

cplx limit_cov(const PhiModel& model, double s, cplx z, double sp, cplx zp, const SolverConfig& cfg,
               const LimitCovOptions& opt) {
    if (!(s > 0.0 && s < 1.0 && sp > 0.0 && sp < 1.0)) throw ParameterError("s must lie in (0, 1)");
    if (z.imag() == 0.0 || zp.imag() == 0.0) throw DomainError("limit_cov needs non-real z");
    if (model.is_levy()) throw UnsupportedError("limit covariance is not available for the Levy kernel");
    if (opt.route == CovRoute::Exchangeable)
        return (std::min(s, sp) - s * sp) * resolvent_entry_cov(model, z, zp, cfg);

    SolverConfig tight = tighten(cfg);
    Prepared pr = prepare(model, s, z, sp, zp, tight, opt.pair_step);
    RhoDerivative da = rho_derivative(model, z, s, cfg);
    RhoDerivative db = rho_derivative(model, zp, sp, cfg);
    std::vector<double> cuts = {0.0, std::min(s, sp), std::max(s, sp), 1.0};
    cplx total = 0.0;
    for (int k = 0; k < 3; ++k) {
        double lo = cuts[k], hi = cuts[k + 1];
        if (hi - lo <= 0.0) continue;
        Rule r = panel_rule(lo, hi, 1, opt.u_order);
        for (std::size_t q = 0; q < r.size(); ++q) {
            double u = r.x[q];
            cplx lp = l_pair_from(model, u, pr, tight).value;
            cplx la = eval_L_u(da, u).value, lb = eval_L_u(db, u).value;
            total += r.w[q] * (lp - la * lb);
        }
    }
    return total;
}

}  // namespace htev
