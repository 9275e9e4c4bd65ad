#include "htev/identities.hpp"

#include <cmath>
#include <numbers>

#include "htev/errors.hpp"

namespace htev {

namespace {

Eigen::MatrixXcd resolvent(const Eigen::MatrixXd& a, cplx z) {
    const auto n = a.rows();
    Eigen::MatrixXcd m = z * Eigen::MatrixXcd::Identity(n, n) - a.cast<cplx>();
    return m.partialPivLu().inverse();
}

Eigen::MatrixXd drop(const Eigen::MatrixXd& a, int k) {
    const int n = static_cast<int>(a.rows());
    Eigen::MatrixXd out(n - 1, n - 1);
    for (int i = 0, ii = 0; i < n; ++i) {
        if (i == k) continue;
        for (int j = 0, jj = 0; j < n; ++j) {
            if (j == k) continue;
            out(ii, jj++) = a(i, j);
        }
        ++ii;
    }
    return out;
}

double max_ratio_on_circle(double r) {
    double worst = 0.0;
    const int m = 720;
    for (int k = 0; k < m; ++k) {
        cplx z = std::polar(r, 2.0 * std::numbers::pi * k / m);
        worst = std::max(worst, std::abs(std::log(1.0 + z) - z) / (r * r));
    }
    return worst;
}

}  // namespace

SchurResult schur_trace_delta(const SymmetricMatrix& a, const Eigen::VectorXd& p_diag, int k, cplx z) {
    if (z.imag() == 0.0) throw DomainError("schur_trace_delta needs Im z != 0");
    const int n = a.n();
    if (k < 0 || k >= n || p_diag.size() != n) throw ParameterError("bad index or P size");
    Eigen::MatrixXcd g = resolvent(a.a, z);
    cplx tr_full = 0.0;
    for (int i = 0; i < n; ++i) tr_full += p_diag(i) * g(i, i);

    Eigen::MatrixXd ak = drop(a.a, k);
    Eigen::VectorXd pk(n - 1);
    Eigen::VectorXd col(n - 1);
    for (int i = 0, ii = 0; i < n; ++i) {
        if (i == k) continue;
        pk(ii) = p_diag(i);
        col(ii++) = a.a(i, k);
    }
    Eigen::MatrixXcd gk = n > 1 ? resolvent(ak, z) : Eigen::MatrixXcd(0, 0);
    cplx tr_minor = 0.0;
    for (int i = 0; i < n - 1; ++i) tr_minor += pk(i) * gk(i, i);

    Eigen::VectorXcd ga = gk * col.cast<cplx>();
    // a* G P G a = (G a)^T P (G a) since G is complex symmetric
    cplx num = p_diag(k);
    for (int i = 0; i < n - 1; ++i) num += ga(i) * pk(i) * ga(i);
    cplx den = z - a.a(k, k) - col.cast<cplx>().dot(ga);

    SchurResult r;
    r.lhs = tr_full - tr_minor;
    r.rhs = num / den;
    r.bound = 5.0 * p_diag.cwiseAbs().maxCoeff() / std::abs(z.imag());
    r.bound_ok = std::abs(r.lhs) <= r.bound;
    return r;
}

double product_exp_radius() {
    static const double radius = [] {
        double lo = 0.1, hi = 0.99;
        for (int it = 0; it < 60; ++it) {
            double mid = 0.5 * (lo + hi);
            if (max_ratio_on_circle(mid) <= 1.0)
                lo = mid;
            else
                hi = mid;
        }
        return lo;
    }();
    return radius;
}

ProdExpResult prod_exp_gap(const std::vector<cplx>& u, int n) {
    if (n < 1) throw ParameterError("n must be positive");
    cplx prod = 1.0, sum = 0.0;
    double mx = 0.0;
    for (const auto& v : u) {
        prod *= 1.0 + v / static_cast<double>(n);
        sum += v;
        mx = std::max(mx, std::abs(v));
    }
    cplx s = sum / static_cast<double>(n);
    ProdExpResult r;
    r.gap = std::abs(prod - std::exp(s));
    double m2n = mx * mx / n;
    r.bound = m2n * std::exp(std::abs(s) + m2n);
    r.applicable = mx / n <= product_exp_radius();
    r.bound_ok = !r.applicable || r.gap <= r.bound;
    return r;
}

}  // namespace htev
