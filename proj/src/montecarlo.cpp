#include "htev/montecarlo.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "htev/errors.hpp"
#include "htev/stats.hpp"

namespace htev {

cplx evaluate_point(const SpectralDecomposition& dec, const ProcessPoint& p) {
    switch (p.kind) {
        case PointKind::Bivariate: return bivariate_value(dec, p.s, p.t);
        case PointKind::Eigenvalue: return eigenvalue_value(dec, p.s, p.t);
        case PointKind::Resolvent: return resolvent_stat(dec, p.s, p.z).value;
    }
    return 0.0;
}

void for_each_replicate(const EnsembleSpec& spec, int n, int R, int workers,
                        const std::function<void(const SpectralDecomposition&, int)>& f) {
    if (R < 1) throw ParameterError("replicate count must be positive");
    workers = std::max(1, std::min(workers, R));
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex mu;
    auto work = [&] {
        for (;;) {
            int r = next.fetch_add(1);
            if (r >= R) return;
            try {
                f(sample_decomposition(spec, n, static_cast<std::uint64_t>(r)), r);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
                next = R;
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
}

CovEstimate covariance_from_samples(const Eigen::MatrixXcd& x) {
    const int R = static_cast<int>(x.rows());
    const int P = static_cast<int>(x.cols());
    if (R < 3) throw ParameterError("need at least three replicates");
    CovEstimate e;
    e.R = R;
    e.samples = x;
    Eigen::VectorXcd S = x.colwise().sum().transpose();
    e.mean = S / static_cast<double>(R);
    Eigen::MatrixXcd Sab = x.transpose() * x;
    Eigen::MatrixXcd Sabc = x.transpose() * x.conjugate();
    const double dR = R;
    e.cov = (Sab - dR * e.mean * e.mean.transpose()) / (dR - 1.0);
    e.cov_conj = (Sabc - dR * e.mean * e.mean.adjoint()) / (dR - 1.0);
    e.se_cov.resize(P, P);
    e.se_cov_conj.resize(P, P);
    std::vector<double> lre(R), lim(R), cre(R), cim(R);
    for (int a = 0; a < P; ++a) {
        for (int b = 0; b < P; ++b) {
            for (int i = 0; i < R; ++i) {
                cplx ma = (S(a) - x(i, a)) / (dR - 1.0);
                cplx mb = (S(b) - x(i, b)) / (dR - 1.0);
                cplx v = (Sab(a, b) - x(i, a) * x(i, b) - (dR - 1.0) * ma * mb) / (dR - 2.0);
                cplx w = (Sabc(a, b) - x(i, a) * std::conj(x(i, b)) - (dR - 1.0) * ma * std::conj(mb)) / (dR - 2.0);
                lre[i] = v.real();
                lim[i] = v.imag();
                cre[i] = w.real();
                cim[i] = w.imag();
            }
            e.se_cov(a, b) = cplx(jackknife_se(lre), jackknife_se(lim));
            e.se_cov_conj(a, b) = cplx(jackknife_se(cre), jackknife_se(cim));
        }
    }
    return e;
}

CovEstimate estimate_cov(const EnsembleSpec& spec, int n, int R, const std::vector<ProcessPoint>& points,
                         int workers) {
    if (R < 30) throw ParameterError("estimate_cov needs R >= 30");
    if (points.empty()) throw ParameterError("point list is empty");
    for (const auto& p : points) {
        if (p.s < 0.0 || p.s > 1.0) throw ParameterError("s must lie in [0,1]");
        if (p.kind == PointKind::Bivariate && (p.t < 0.0 || p.t > 1.0)) throw ParameterError("t must lie in [0,1]");
        if (p.kind == PointKind::Resolvent && p.z.imag() == 0.0) throw DomainError("z must be off the real axis");
    }
    Eigen::MatrixXcd x(R, points.size());
    for_each_replicate(spec, n, R, workers, [&](const SpectralDecomposition& dec, int r) {
        for (std::size_t k = 0; k < points.size(); ++k) x(r, k) = evaluate_point(dec, points[k]);
    });
    CovEstimate e = covariance_from_samples(x);
    e.points = points;
    e.n = n;
    return e;
}

double exchangeable_variance_stat(const SpectralDecomposition& dec, double s, double lambda) {
    const int n = dec.n;
    int ks = row_count(n, s);
    if (ks == 0 || ks == n) return 0.0;
    int kl = count_below(dec, lambda);
    Eigen::VectorXd X = Eigen::VectorXd::Constant(n, -static_cast<double>(kl) / n);
    if (kl > 0) X += dec.overlaps.leftCols(kl).rowwise().sum();
    double sum = X.sum(), sq = X.squaredNorm();
    double dn = n;
    double e = sq / dn - (sum * sum - sq) / (dn * (dn - 1.0));
    double sn = static_cast<double>(ks) / n;
    return (sn - sn * sn) * e;
}

namespace {

ExchangeableComparison compare(const std::vector<double>& ex, const std::vector<double>& c) {
    const std::size_t R = ex.size();
    if (R < 3) throw ParameterError("need at least three replicates");
    auto mean_without = [&](const std::vector<double>& v, std::size_t skip) {
        double s = 0.0;
        for (std::size_t i = 0; i < R; ++i)
            if (i != skip) s += v[i];
        return s / static_cast<double>(skip < R ? R - 1 : R);
    };
    auto var_without = [&](std::size_t skip) {
        double m = mean_without(c, skip), s = 0.0;
        for (std::size_t i = 0; i < R; ++i)
            if (i != skip) s += (c[i] - m) * (c[i] - m);
        return s / static_cast<double>((skip < R ? R - 1 : R) - 1);
    };
    ExchangeableComparison out;
    out.exchangeable = mean_without(ex, R);
    out.direct = var_without(R);
    out.exchangeable_se = jackknife_se(R, [&](std::size_t i) { return mean_without(ex, i); });
    out.direct_se = jackknife_se(R, [&](std::size_t i) { return var_without(i); });
    out.difference_se = jackknife_se(R, [&](std::size_t i) { return mean_without(ex, i) - var_without(i); });
    return out;
}

}  // namespace

ExchangeableComparison variance_exchangeable(const std::vector<SpectralDecomposition>& batch, double s,
                                             double lambda) {
    std::vector<double> ex, c;
    for (const auto& d : batch) {
        ex.push_back(exchangeable_variance_stat(d, s, lambda));
        c.push_back(eigenvalue_value(d, s, lambda));
    }
    return compare(ex, c);
}

ExchangeableComparison variance_exchangeable(const EnsembleSpec& spec, int n, int R, double s, double lambda,
                                             int workers) {
    std::vector<double> ex(R), c(R);
    for_each_replicate(spec, n, R, workers, [&](const SpectralDecomposition& d, int r) {
        ex[r] = exchangeable_variance_stat(d, s, lambda);
        c[r] = eigenvalue_value(d, s, lambda);
    });
    return compare(ex, c);
}

ScalingReport scaling_scan(const EnsembleSpec& spec, const std::vector<int>& n_list, int R, double s, double t,
                           int workers) {
    if (n_list.size() < 2) throw ParameterError("scaling scan needs at least two sizes");
    ScalingReport rep;
    rep.n_list = n_list;
    std::vector<double> lx, ly, lsig;
    for (int n : n_list) {
        CovEstimate e = estimate_cov(spec, n, R, {ProcessPoint::bivariate(s, t)}, workers);
        double v = e.cov(0, 0).real();
        double se = e.se_cov(0, 0).real();
        if (!(v > 0.0)) throw NumericError("zero variance in scaling scan");
        rep.variance.push_back(v);
        rep.variance_se.push_back(se);
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(v));
        lsig.push_back(se / v);
    }
    LinearFit f = weighted_linear_fit(lx, ly, lsig);
    rep.slope = f.slope;
    rep.slope_se = f.slope_se;
    rep.ci_low = f.slope - 1.96 * f.slope_se;
    rep.ci_high = f.slope + 1.96 * f.slope_se;
    return rep;
}

double tightness_bound(int n, double s, double sp, double t, double tp) {
    double I = row_count(n, sp) - row_count(n, s);
    double J = row_count(n, tp) - row_count(n, t);
    double dn = n;
    double a = I / dn * (1.0 - I / dn);
    double b2 = J * J / (dn * (dn - 1.0));
    return 7.0 / dn + 6.0 * a * a * b2;
}

TightnessReport tightness_check(const EnsembleSpec& spec, int n, int R, const std::vector<double>& grid,
                                int workers) {
    if (grid.size() < 2) throw ParameterError("grid needs at least two points");
    struct Rect {
        double s, sp, t, tp;
    };
    std::vector<Rect> rects;
    for (std::size_t a = 0; a < grid.size(); ++a)
        for (std::size_t b = a + 1; b < grid.size(); ++b)
            for (std::size_t c = 0; c < grid.size(); ++c)
                for (std::size_t d = c + 1; d < grid.size(); ++d) rects.push_back({grid[a], grid[b], grid[c], grid[d]});
    Eigen::MatrixXd d4(R, rects.size());
    for_each_replicate(spec, n, R, workers, [&](const SpectralDecomposition& dec, int r) {
        ProcessSurface surf = bivariate_process(dec, grid, grid);
        for (std::size_t k = 0; k < rects.size(); ++k) {
            double v = increment(surf, rects[k].s, rects[k].sp, rects[k].t, rects[k].tp);
            d4(r, k) = v * v * v * v;
        }
    });
    TightnessReport rep;
    rep.max_ratio = -1e300;
    for (std::size_t k = 0; k < rects.size(); ++k) {
        TightnessEntry e{rects[k].s, rects[k].sp, rects[k].t, rects[k].tp, 0, 0, 0, 0};
        e.fourth_moment = d4.col(k).mean();
        double var = (d4.col(k).array() - e.fourth_moment).square().sum() / (R - 1.0);
        e.std_err = std::sqrt(var / R);
        e.bound = tightness_bound(n, e.s, e.sp, e.t, e.tp);
        e.ratio = (e.fourth_moment - 3.0 * e.std_err) / e.bound;
        rep.max_ratio = std::max(rep.max_ratio, e.ratio);
        rep.entries.push_back(e);
    }
    rep.pass = rep.max_ratio <= 1.0;
    return rep;
}

}  // namespace htev
