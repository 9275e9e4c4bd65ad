#include "htev/inversion.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "htev/errors.hpp"
#include "htev/quadrature.hpp"

namespace htev {

namespace {
const cplx I(0.0, 1.0);
constexpr double kPi = 3.14159265358979323846;
// piecewise linear transfer of node values between discretizations, enough
// for a starting point
Eigen::VectorXcd interpolate_nodes(const RhoGrid& from, const Discretization& to) {
    const auto& y = from.disc->y;
    Eigen::VectorXcd out(to.size());
    for (int q = 0; q < to.size(); ++q) {
        double t = to.y[q];
        auto it = std::lower_bound(y.begin(), y.end(), t);
        if (it == y.begin()) {
            out(q) = from.values(0) * (t / y.front());
        } else if (it == y.end()) {
            out(q) = from.values(from.values.size() - 1);
        } else {
            int k = static_cast<int>(it - y.begin());
            double a = (t - y[k - 1]) / (y[k] - y[k - 1]);
            out(q) = (1.0 - a) * from.values(k - 1) + a * from.values(k);
        }
    }
    return out;
}

}  // namespace

void EtaSchedule::validate() const {
    if (etas.empty()) throw ParameterError("eta schedule is empty");
    for (std::size_t k = 0; k < etas.size(); ++k) {
        if (!(etas[k] > 0.0)) throw ParameterError("eta values must be positive");
        if (k > 0 && !(etas[k] < etas[k - 1])) throw ParameterError("eta values must be strictly decreasing");
    }
    if (order < 0 || order > 2) throw ParameterError("extrapolation order must be 0, 1 or 2");
    if (static_cast<int>(etas.size()) < order + 1) throw ParameterError("eta schedule too short for the fit order");
}

Extrapolation extrapolate_eta(const EtaSchedule& schedule, const std::vector<double>& values) {
    schedule.validate();
    if (values.size() != schedule.etas.size()) throw ParameterError("one value per eta expected");
    const int m = static_cast<int>(values.size()), p = schedule.order + 1;
    Eigen::MatrixXd A(m, p);
    Eigen::VectorXd b(m);
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < p; ++j) A(k, j) = std::pow(schedule.etas[k], j);
        b(k) = values[k];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    Extrapolation e;
    e.value = c(0);
    e.residual = (A * c - b).cwiseAbs().maxCoeff();
    e.per_eta = values;
    return e;
}

VerticalRule vertical_rule(const EtaSchedule& schedule, int order, double top) {
    schedule.validate();
    if (order < 2) throw ParameterError("vertical rule order must be at least 2");
    const auto& etas = schedule.etas;
    if (!(top > etas.front())) throw ParameterError("vertical_top must exceed the largest eta");
    const auto& gl = gauss_legendre(order);
    VerticalRule r;
    auto seg = [&](double a, double b, int level) {
        double h = 0.5 * (b - a), c = 0.5 * (a + b);
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            r.y.push_back(c + h * gl.x[q]);
            r.w.push_back(h * gl.w[q]);
            r.level.push_back(level);
        }
    };
    for (std::size_t k = etas.size() - 1; k > 0; --k) seg(etas[k], etas[k - 1], static_cast<int>(k));
    // geometric segments: integrands vary on the scale of y itself
    for (double a = etas.front(); a < top;) {
        double b = std::min(2.0 * a, top);
        if (top - b < 0.25 * (b - a)) b = top;
        seg(a, b, 0);
        a = b;
    }
    // tail: y = top / v, dy = top / v^2 dv on (0, 1]
    for (std::size_t q = 0; q < gl.x.size(); ++q) {
        double v = 0.5 * (1.0 + gl.x[q]);
        r.y.push_back(top / v);
        r.w.push_back(0.5 * gl.w[q] * top / (v * v));
        r.level.push_back(0);
    }
    return r;
}

Extrapolation invert_cauchy_cdf_ex(const CauchyFn& K, double lambda, const EtaSchedule& schedule, double E_window,
                                   const InversionOptions& opt) {
    schedule.validate();
    if (!(E_window > 0.0)) throw ParameterError("E_window must be positive");
    std::vector<double> vals(schedule.etas.size(), 0.0);
    if (opt.path == InversionPath::Horizontal) {
        if (lambda <= -E_window) return extrapolate_eta(schedule, vals);
        for (std::size_t k = 0; k < vals.size(); ++k) {
            double eta = schedule.etas[k];
            auto f = [&](double E) { return K(cplx(E, eta)).imag(); };
            double err = 0.0;
            // split at lambda's neighbourhood so the adaptive rule sees the steep part
            double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -E_window, lambda, 20,
                                                                                     opt.tolerance, &err);
            if (!std::isfinite(v)) throw NumericError("horizontal Cauchy inversion failed");
            if (err > 1e3 * opt.tolerance * std::max(1.0, std::abs(v)))
                throw NumericError("horizontal Cauchy inversion did not reach tolerance");
            vals[k] = v / kPi;
        }
    } else {
        VerticalRule r = vertical_rule(schedule, opt.vertical_order, opt.vertical_top);
        std::vector<cplx> part(vals.size(), 0.0);
        for (std::size_t q = 0; q < r.y.size(); ++q) part[r.level[q]] += r.w[q] * K(cplx(lambda, r.y[q]));
        cplx acc = 0.0;
        for (std::size_t k = 0; k < vals.size(); ++k) {
            acc += part[k];
            // int_{-inf}^{lambda} K(E + i eta) dE = -i int_eta^inf K(lambda + i y) dy
            vals[k] = -acc.real() / kPi;
        }
    }
    return extrapolate_eta(schedule, vals);
}

double invert_cauchy_cdf(const CauchyFn& K, double lambda, const EtaSchedule& schedule, double E_window,
                         const InversionOptions& opt) {
    return invert_cauchy_cdf_ex(K, lambda, schedule, E_window, opt).value;
}

SpectralCdf spectral_cdf(const PhiModel& model, const std::vector<double>& lambda_grid, const EtaSchedule& schedule,
                         const SolverConfig& cfg) {
    schedule.validate();
    if (lambda_grid.empty()) throw ParameterError("lambda grid is empty");
    for (std::size_t k = 1; k < lambda_grid.size(); ++k)
        if (!(lambda_grid[k] > lambda_grid[k - 1])) throw ParameterError("lambda grid must be increasing");
    InversionOptions opt;
    opt.path = InversionPath::Vertical;
    VerticalRule r = vertical_rule(schedule, opt.vertical_order, opt.vertical_top);
    // visit nodes from the top so each solve warm-starts the next one
    std::vector<int> perm(r.y.size());
    for (std::size_t q = 0; q < perm.size(); ++q) perm[q] = static_cast<int>(q);
    std::sort(perm.begin(), perm.end(), [&](int a, int b) { return r.y[a] > r.y[b]; });

    SpectralCdf out;
    out.lambda = lambda_grid;
    const std::size_t nl = lambda_grid.size();
    double fmax = 0.0;
    for (double l : lambda_grid) fmax = std::max(fmax, std::abs(l));
    std::vector<std::vector<cplx>> part(nl, std::vector<cplx>(schedule.etas.size(), 0.0));
    std::vector<RhoGrid> prev(nl);
    for (int q : perm) {
        // one set of nodes per height, shared by the whole lambda grid
        auto disc = make_discretization(model, r.y[q], fmax, cfg);
        for (std::size_t k = 0; k < nl; ++k) {
            cplx z(lambda_grid[k], r.y[q]);
            Eigen::VectorXcd init;
            if (prev[k].disc) init = interpolate_nodes(prev[k], *disc);
            prev[k] = solve_rho_s_on(disc, z, 0.0, 0.5, cfg, init);
            cplx G = stieltjes_mu_phi(prev[k], z);
            // K_f = R - G with R the Cauchy transform of the standard Cauchy law,
            // so that K_f = O(|z|^-2) and the vertical path applies
            part[k][r.level[q]] += r.w[q] * (1.0 / (z + I) - G);
        }
    }
    for (std::size_t j = 0; j < nl; ++j) {
        const double lambda = lambda_grid[j];
        std::vector<double> vals(schedule.etas.size());
        cplx acc = 0.0;
        for (std::size_t k = 0; k < vals.size(); ++k) {
            acc += part[j][k];
            double eta = schedule.etas[k];
            vals[k] = 0.5 + std::atan(lambda / (1.0 + eta)) / kPi - acc.real() / kPi;
        }
        Extrapolation e = extrapolate_eta(schedule, vals);
        out.raw.push_back(e.value);
        out.fit_residual = std::max(out.fit_residual, e.residual);
    }
    // clip, then pool adjacent violators
    std::vector<double> v(out.raw.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::clamp(out.raw[k], 0.0, 1.0);
    std::vector<double> level;
    std::vector<int> count;
    for (double x : v) {
        level.push_back(x);
        count.push_back(1);
        while (level.size() > 1 && level[level.size() - 2] > level.back()) {
            double tot = level.back() * count.back() + level[level.size() - 2] * count[count.size() - 2];
            int c = count.back() + count[count.size() - 2];
            level.pop_back();
            count.pop_back();
            level.back() = tot / c;
            count.back() = c;
        }
    }
    for (std::size_t b = 0; b < level.size(); ++b)
        for (int j = 0; j < count[b]; ++j) out.value.push_back(level[b]);
    for (std::size_t k = 0; k < v.size(); ++k)
        out.max_adjustment = std::max(out.max_adjustment, std::abs(out.value[k] - out.raw[k]));
    return out;
}

PhiSet e_phi_set(const std::vector<double>& lambda_grid, const std::vector<double>& F, double jump_threshold) {
    if (lambda_grid.size() != F.size()) throw ParameterError("grid and F differ in length");
    if (F.empty()) throw ParameterError("empty F");
    if (!(jump_threshold > 0.0)) throw ParameterError("jump threshold must be positive");
    // A step is a jump when it exceeds both neighbouring steps by more than the
    // threshold; the neighbours' mean is taken as the continuous part of the step.
    const std::size_t K = F.size();
    std::vector<double> d(K, 0.0);
    for (std::size_t k = 1; k < K; ++k) d[k] = std::max(0.0, F[k] - F[k - 1]);
    PhiSet set;
    double lo = 0.0;
    for (std::size_t k = 1; k < K; ++k) {
        double left = k > 1 ? d[k - 1] : 0.0;
        double right = k + 1 < K ? d[k + 1] : 0.0;
        int cnt = (k > 1) + (k + 1 < K);
        if (d[k] - std::max(left, right) <= jump_threshold) continue;
        double cont = cnt ? (left + right) / cnt : 0.0;
        set.intervals.push_back({lo, F[k - 1] + 0.5 * cont});
        set.jumps.push_back({lambda_grid[k], d[k] - cont});
        lo = F[k] - 0.5 * cont;
    }
    set.intervals.push_back({lo, 1.0});
    return set;
}

CovCResult cov_C_from_H_ex(const CovHandle& cov, double s, double lambda, double sp, double lambdap,
                           const EtaSchedule& schedule, const InversionOptions& opt) {
    schedule.validate();
    if (!(s >= 0.0 && s <= 1.0 && sp >= 0.0 && sp <= 1.0)) throw ParameterError("s must lie in [0, 1]");
    CovCResult out;
    out.per_eta.assign(schedule.etas.size(), 0.0);
    if (s == 0.0 || s == 1.0 || sp == 0.0 || sp == 1.0) return out;
    VerticalRule r = vertical_rule(schedule, opt.vertical_order, opt.vertical_top);
    const int N = static_cast<int>(r.y.size());
    const int L = static_cast<int>(schedule.etas.size());
    const bool same = s == sp && lambda == lambdap;
    // C = (1/pi) Re I with I = int_eta^inf H(lambda + i y) dy, so
    // E[C C'] = (1 / 2 pi^2) Re(E[I I'] + E[I conj I'])
    Eigen::MatrixXcd part = Eigen::MatrixXcd::Zero(L, L);
    for (int a = 0; a < N; ++a) {
        cplx z(lambda, r.y[a]);
        for (int b = 0; b < N; ++b) {
            if (same && b < a) continue;
            cplx zp(lambdap, r.y[b]);
            cplx v = cov(s, z, sp, zp) + cov(s, z, sp, std::conj(zp));
            double mult = same && b != a ? 2.0 : 1.0;
            part(r.level[a], r.level[b]) += mult * r.w[a] * r.w[b] * v;
        }
    }
    std::vector<double> vals(L);
    for (int k = 0; k < L; ++k) {
        cplx acc = 0.0;
        for (int i = 0; i <= k; ++i)
            for (int j = 0; j <= k; ++j) acc += part(i, j);
        vals[k] = acc.real() / (2.0 * kPi * kPi);
    }
    Extrapolation e = extrapolate_eta(schedule, vals);
    out.value = e.value;
    out.fit_residual = e.residual;
    out.per_eta = vals;
    return out;
}

double cov_C_from_H(const CovHandle& cov, double s, double lambda, double sp, double lambdap,
                    const EtaSchedule& schedule, const InversionOptions& opt) {
    return cov_C_from_H_ex(cov, s, lambda, sp, lambdap, schedule, opt).value;
}

CovHandle limit_cov_handle(const PhiModel& model, const SolverConfig& cfg, const LimitCovOptions& opt) {
    if (opt.route != CovRoute::Exchangeable)
        return [model, cfg, opt](double s, cplx z, double sp, cplx zp) { return limit_cov(model, s, z, sp, zp, cfg, opt); };
    // the exchangeable route only needs z~ = 0 solutions, which repeat across the (y, y') grid;
    // z and conj(z) share one solve
    struct Cache {
        std::mutex mu;
        std::map<std::pair<double, double>, RhoGrid> grids;
    };
    auto cache = std::make_shared<Cache>();
    auto grid = [model, cfg, cache](cplx z) {
        std::pair<double, double> key(z.real(), std::abs(z.imag()));
        RhoGrid g;
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->grids.find(key);
            if (it != cache->grids.end()) g = it->second;
        }
        if (!g.disc) {
            g = solve_rho_z(model, cplx(key.first, key.second), cfg);
            std::lock_guard<std::mutex> lock(cache->mu);
            cache->grids.emplace(key, g);
        }
        g.conjugated = z.imag() < 0.0;
        return g;
    };
    return [model, cfg, grid](double s, cplx z, double sp, cplx zp) {
        if (!(s > 0.0 && s < 1.0 && sp > 0.0 && sp < 1.0)) throw ParameterError("s must lie in (0, 1)");
        return (std::min(s, sp) - s * sp) * resolvent_entry_cov(model, grid(z), grid(zp), cfg);
    };
}

}  // namespace htev
