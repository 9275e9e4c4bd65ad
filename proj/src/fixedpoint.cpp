#include "htev/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "htev/errors.hpp"
#include "htev/quadrature.hpp"
#include "anderson.hpp"

namespace htev {

namespace {
const cplx I(0.0, 1.0);
}

void SolverConfig::validate() const {
    if (nodes < 8 || panel_order < 2 || !(phase_per_panel > 0) || max_iterations < 1 || anderson_depth < 0)
        throw ParameterError("solver configuration: counts must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw ParameterError("damping must lie in (0, 1]");
    if (!(tolerance > 0.0 && tolerance < 1e-6)) throw ParameterError("tolerance must lie in (0, 1e-6)");
    if (!(truncation >= 0.0) || !(truncation_eps > 0.0 && truncation_eps < 1.0))
        throw ParameterError("bad truncation settings");
    if (!(continuation_start > 0.0) || !(continuation_ratio > 0.0 && continuation_ratio < 1.0))
        throw ParameterError("bad continuation schedule");
}

Eigen::RowVectorXd Discretization::kernel_row(double t) const {
    Eigen::RowVectorXd r(size());
    for (int q = 0; q < size(); ++q) r(q) = t * g_eval(model, t * y[q]) * w[q];
    return r;
}

double Discretization::zero_piece(double t) const {
    if (y_lo <= 0.0 || t <= 0.0) return 0.0;
    // g(t y) = C (t y)^gamma on [0, y_lo], the rest of the integrand is 1 there
    return t * g_eval(model, t * y_lo) * y_lo / (model.gamma + 1.0);
}

std::shared_ptr<const Discretization> make_discretization(const PhiModel& model, double decay, double freq,
                                                          const SolverConfig& cfg) {
    if (!(decay > 0.0)) throw DomainError("discretization needs a positive decay rate");
    auto d = std::make_shared<Discretization>();
    d->model = model;
    d->T = cfg.truncation > 0.0 ? cfg.truncation : -std::log(cfg.truncation_eps) / decay;
    const double T = d->T;
    const double xm = model.oscillatory() ? model.max_atom() : 0.0;
    // cumulative phase M(y) = A sqrt(y) + B y
    const double A = 2.0 * std::sqrt(xm * T);
    const double B = std::abs(freq) + decay;
    const double MT = A * std::sqrt(T) + B * T;
    const int order = cfg.panel_order;
    int panels = std::max(cfg.nodes / order, static_cast<int>(std::ceil(MT / cfg.phase_per_panel)));
    if (panels * order > cfg.max_nodes)
        throw NumericError("quadrature needs " + std::to_string(panels * order) + " nodes, above max_nodes " +
                           std::to_string(cfg.max_nodes));
    auto inv = [&](double m) {
        if (A == 0.0) return m / B;
        double r = (-A + std::sqrt(A * A + 4.0 * B * m)) / (2.0 * B);
        return r * r;
    };
    std::vector<double> edges(panels + 1);
    for (int k = 0; k <= panels; ++k) edges[k] = inv(MT * k / panels);
    edges[panels] = T;
    Rule r;
    int first = 0;
    if (model.is_levy()) {
        // geometric grading towards 0 for the y^gamma endpoint
        double top = edges[1];
        d->y_lo = top * 1e-14;
        std::vector<double> g;
        for (double a = top; a > d->y_lo; a /= 6.0) g.push_back(a);
        g.push_back(d->y_lo);
        for (std::size_t k = g.size() - 1; k > 0; --k) r.add_panel(g[k], g[k - 1], order);
        first = 1;
    }
    for (int k = first; k < panels; ++k) r.add_panel(edges[k], edges[k + 1], order);
    d->y = r.x;
    d->w = r.w;
    const int N = d->size();
    // g(y_i y_q) is symmetric in (i, q)
    Eigen::MatrixXd gm(N, N);
    for (int q = 0; q < N; ++q)
        for (int i = q; i < N; ++i) {
            double v = g_eval(model, d->y[i] * d->y[q]);
            gm(i, q) = v;
            gm(q, i) = v;
        }
    Eigen::Map<const Eigen::VectorXd> yv(d->y.data(), N), wv(d->w.data(), N);
    d->W = yv.asDiagonal() * gm * wv.asDiagonal();
    d->b.resize(N);
    for (int i = 0; i < N; ++i) d->b(i) = d->zero_piece(d->y[i]);
    return d;
}

bool in_domain(cplx z, cplx zt, double s) {
    if (z.imag() == 0.0) return false;
    double sg = z.imag() > 0 ? 1.0 : -1.0;
    return sg * (z + (1.0 - s) * zt).imag() > 0.0 && sg * (z - s * zt).imag() > 0.0;
}

double domain_delta(cplx z, cplx zt, double s) {
    double sg = z.imag() > 0 ? 1.0 : -1.0;
    return std::min(sg * (z + (1.0 - s) * zt).imag(), sg * (z - s * zt).imag());
}

cplx normalize_sign(cplx v, bool conj) { return conj ? std::conj(v) : v; }

Eigen::VectorXcd RhoGrid::node_values() const { return conjugated ? values.conjugate().eval() : values; }

namespace {

// inner products over nodes with the Levy [0, y_lo] piece
cplx nystrom_at(const Discretization& d, const Eigen::VectorXcd& values, const Eigen::VectorXcd& diag, double t) {
    if (t <= 0.0) return 0.0;
    Eigen::RowVectorXd row = d.kernel_row(t);
    cplx acc = d.zero_piece(t);
    for (int q = 0; q < d.size(); ++q) acc += row(q) * diag(q) * std::exp(values(q));
    return acc;
}

Eigen::VectorXcd make_diag(const Discretization& d, cplx z, cplx zt, double s) {
    Eigen::VectorXcd v(d.size());
    for (int q = 0; q < d.size(); ++q) {
        double y = d.y[q];
        v(q) = (s * std::exp(I * y * zt) + (1.0 - s)) * std::exp(I * y * (z - s * zt));
    }
    return v;
}

RhoGrid finish(std::shared_ptr<const Discretization> disc, cplx zn, cplx ztn, double s, bool conj,
               Eigen::VectorXcd values, Eigen::VectorXcd diag, double res, int iters) {
    RhoGrid g;
    g.disc = std::move(disc);
    g.z = zn;
    g.zt = ztn;
    g.s = s;
    g.conjugated = conj;
    g.values = std::move(values);
    g.diag = std::move(diag);
    g.residual = res;
    g.iterations = iters;
    g.max_real = g.values.size() ? g.values.real().maxCoeff() : 0.0;
    return g;
}

double freq_of(cplx z, cplx zt, double s) {
    return std::max(std::abs((z + (1.0 - s) * zt).real()), std::abs((z - s * zt).real()));
}

}  // namespace

cplx RhoGrid::value_at(double t) const {
    if (t < 0.0) throw DomainError("rho is defined for t >= 0");
    return normalize_sign(nystrom_at(*disc, values, diag, t), conjugated);
}

double RhoGrid::residual_at(double t) const {
    // only meaningful at nodes, where value_at is the map applied to the nodes
    const auto& y = disc->y;
    auto it = std::lower_bound(y.begin(), y.end(), t);
    if (it == y.end() || *it != t) return 0.0;
    int q = static_cast<int>(it - y.begin());
    return std::abs(nystrom_at(*disc, values, diag, t) - values(q));
}

RhoGrid solve_rho_s_on(std::shared_ptr<const Discretization> disc, cplx z, cplx zt, double s,
                       const SolverConfig& cfg, const Eigen::VectorXcd& init) {
    cfg.validate();
    if (!in_domain(z, zt, s)) throw DomainError("(z, z~) is outside the admissible domain for this s");
    bool conj = z.imag() < 0.0;
    cplx zn = normalize_sign(z, conj), ztn = normalize_sign(zt, conj);
    Eigen::VectorXcd diag = make_diag(*disc, zn, ztn, s);
    Eigen::VectorXcd x = init.size() == disc->size() ? init : Eigen::VectorXcd::Zero(disc->size());
    const Eigen::MatrixXd& W = disc->W;
    const Eigen::VectorXd& b = disc->b;
    auto F = [&](const Eigen::VectorXcd& v) -> Eigen::VectorXcd {
        Eigen::VectorXcd e = diag.cwiseProduct(v.array().exp().matrix());
        Eigen::VectorXd re = W * e.real(), im = W * e.imag();
        Eigen::VectorXcd out(v.size());
        out.real() = re + b;
        out.imag() = im;
        return out;
    };
    auto [res, iters] = detail::fixed_point(x, F, cfg, cfg.tolerance);
    return finish(disc, zn, ztn, s, conj, std::move(x), std::move(diag), res, iters);
}

RhoGrid solve_rho_s(const PhiModel& model, cplx z, cplx zt, double s, const SolverConfig& cfg) {
    cfg.validate();
    if (!(s >= 0.0 && s <= 1.0)) throw ParameterError("s must lie in [0, 1]");
    if (!in_domain(z, zt, s)) throw DomainError("(z, z~) is outside the admissible domain for this s");
    bool conj = z.imag() < 0.0;
    cplx zn = normalize_sign(z, conj), ztn = normalize_sign(zt, conj);
    // Im z ladder from continuation_start down to the target
    std::vector<double> ladder;
    for (double im = cfg.continuation_start; im > zn.imag() * 1.0000001; im *= cfg.continuation_ratio)
        ladder.push_back(im);
    ladder.push_back(zn.imag());
    RhoGrid prev;
    bool have_prev = false;
    for (double im : ladder) {
        cplx zk(zn.real(), im);
        auto disc = make_discretization(model, domain_delta(zk, ztn, s), freq_of(zk, ztn, s), cfg);
        Eigen::VectorXcd init;
        if (have_prev) {
            init.resize(disc->size());
            for (int q = 0; q < disc->size(); ++q) init(q) = nystrom_at(*prev.disc, prev.values, prev.diag, disc->y[q]);
        }
        prev = solve_rho_s_on(disc, zk, ztn, s, cfg, init);
        have_prev = true;
    }
    prev.conjugated = conj;
    return prev;
}

RhoGrid solve_rho_z(const PhiModel& model, cplx z, const SolverConfig& cfg) {
    if (z.imag() == 0.0) throw DomainError("solve_rho_z needs Im z != 0");
    return solve_rho_s(model, z, 0.0, 0.5, cfg);
}

cplx stieltjes_mu_phi(const RhoGrid& rho, cplx z) {
    if (rho.zt != cplx(0.0)) throw ParameterError("stieltjes_mu_phi needs a grid solved at z~ = 0");
    cplx zn = normalize_sign(z, rho.conjugated);
    if (std::abs(zn - rho.z) > 1e-12 * std::max(1.0, std::abs(zn)))
        throw ParameterError("rho grid was solved at a different z");
    // 1/w = -i int_0^inf e^{itw} dt and E e^{-itX} -> e^{rho(t)} give
    // G(z) = -i int e^{itz + rho(t)} dt in the upper half-plane
    const auto& d = *rho.disc;
    cplx acc = 0.0;
    for (int q = 0; q < d.size(); ++q) acc += d.w[q] * std::exp(I * d.y[q] * rho.z + rho.values(q));
    cplx G = -I * acc;
    if (!std::isfinite(G.real()) || !std::isfinite(G.imag())) throw NumericError("Stieltjes quadrature diverged");
    return normalize_sign(G, rho.conjugated);
}

cplx semicircle_stieltjes(cplx z, double sigma) {
    double s2 = sigma * sigma;
    cplx r = std::sqrt(z * z - 4.0 * s2);
    cplx G = (z - r) / (2.0 * s2);
    // pick the branch with Im G of opposite sign to Im z
    if (G.imag() * z.imag() > 0.0) G = (z + r) / (2.0 * s2);
    return G;
}

RhoDerivative rho_derivative(const PhiModel& model, cplx z, double s, const SolverConfig& cfg) {
    if (z.imag() == 0.0) throw DomainError("L_u needs Im z != 0");
    if (!(s > 0.0 && s < 1.0)) throw ParameterError("s must lie in (0, 1)");
    SolverConfig tight = cfg;
    tight.tolerance = std::min(cfg.tolerance, 1e-13);
    RhoDerivative out;
    out.base = solve_rho_s(model, z, 0.0, s, tight);
    bool conj = out.base.conjugated;
    cplx zn = out.base.z;
    double h = 1e-4 * std::max(1.0, std::abs(z));
    out.h = h;
    auto diff = [&](double step) {
        RhoGrid p = solve_rho_s_on(out.base.disc, zn, step, s, tight, out.base.values);
        RhoGrid m = solve_rho_s_on(out.base.disc, zn, -step, s, tight, out.base.values);
        return Eigen::VectorXcd((p.values - m.values) / (2.0 * step));
    };
    out.d_h = diff(h);
    out.d_h2 = diff(0.5 * h);
    out.d = (4.0 * out.d_h2 - out.d_h) / 3.0;
    (void)conj;
    return out;
}

LuResult eval_L_u(const RhoDerivative& der, double u) {
    const RhoGrid& b = der.base;
    const auto& d = *b.disc;
    double c = (u <= b.s ? 1.0 : 0.0) - b.s;
    cplx G = 0.0, J = 0.0, Jh = 0.0, Jh2 = 0.0;
    for (int q = 0; q < d.size(); ++q) {
        cplx e = d.w[q] * std::exp(I * d.y[q] * b.z + b.values(q));
        G += e;
        J += e * der.d(q) / d.y[q];
        Jh += e * der.d_h(q) / d.y[q];
        Jh2 += e * der.d_h2(q) / d.y[q];
    }
    G *= -I;
    LuResult r;
    r.value = normalize_sign(c * G - J, b.conjugated);
    r.value_h = normalize_sign(c * G - Jh, b.conjugated);
    r.value_h2 = normalize_sign(c * G - Jh2, b.conjugated);
    return r;
}

LuResult eval_L_u(const PhiModel& model, double u, double s, cplx z, const SolverConfig& cfg) {
    if (!(u >= 0.0 && u <= 1.0)) throw ParameterError("u must lie in [0, 1]");
    return eval_L_u(rho_derivative(model, z, s, cfg), u);
}

}  // namespace htev
