#include "htev/eigenprocess.hpp"

#include <algorithm>
#include <cmath>
#include <lapacke.h>
#include <sstream>

#include "htev/errors.hpp"
#include "htev/rng.hpp"

namespace htev {

namespace {

Eigen::MatrixXd haar_orthogonal(int k, CounterRng& rng) {
    Eigen::MatrixXd g(k, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < k; ++i) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(k, k);
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < k; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
    return q;
}

void check_grid(const std::vector<double>& g, const char* name) {
    if (g.empty()) throw ParameterError(std::string(name) + " grid is empty");
    for (std::size_t i = 1; i < g.size(); ++i)
        if (!(g[i] > g[i - 1])) throw ParameterError(std::string(name) + " grid must be strictly ascending");
}

void check_unit_grid(const std::vector<double>& g, const char* name) {
    check_grid(g, name);
    if (g.front() < 0.0 || g.back() > 1.0) throw ParameterError(std::string(name) + " grid must lie in [0,1]");
}

// sum_{i < ks, j < kt} (w_ij - 1/n) / sqrt(n), exactly 0 on the boundary
double surface_value(const Eigen::VectorXd& colcum, int ks, int kt, int n) {
    if (ks == 0 || kt == 0 || ks == n || kt == n) return 0.0;
    double acc = colcum(kt - 1);
    return (acc - static_cast<double>(ks) * kt / n) / std::sqrt(static_cast<double>(n));
}

Eigen::VectorXd column_cumsum_of_rows(const SpectralDecomposition& dec, int ks) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(dec.n);
    if (ks > 0) c = dec.overlaps.topRows(ks).colwise().sum().transpose();
    for (int j = 1; j < dec.n; ++j) c(j) += c(j - 1);
    return c;
}

// O(n^2) check of A = U diag(l) U^T and U^T U = I on a fixed sign vector
bool probe_ok(const Eigen::MatrixXd& a, const Eigen::MatrixXd& u, const Eigen::VectorXd& l) {
    const int n = static_cast<int>(a.rows());
    Eigen::VectorXd x(n);
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int i = 0; i < n; ++i) {
        h = mix64(h + static_cast<std::uint64_t>(i));
        x(i) = (h & 1) ? 1.0 : -1.0;
    }
    Eigen::VectorXd c = u.transpose() * x;
    double scale = std::max(1.0, l.cwiseAbs().maxCoeff()) * x.norm();
    double rec = (u * l.cwiseProduct(c) - a * x).norm();
    double orth = (u.transpose() * (u * c) - c).norm();
    return std::isfinite(rec) && rec <= 1e-8 * scale && orth <= 1e-8 * x.norm();
}

}  // namespace

int row_count(int n, double s) {
    if (s < 0.0 || s > 1.0) throw ParameterError("fraction must lie in [0,1]");
    return std::min(n, static_cast<int>(std::floor(s * n + 1e-9)));
}

SpectralDecomposition decompose(const SymmetricMatrix& m, double degeneracy_tol, std::uint64_t rotation_key) {
    const int n = m.n();
    if (n < 1 || m.a.cols() != n) throw ParameterError("matrix must be square");
    if (m.a != m.a.transpose()) throw ParameterError("matrix is not symmetric");
    SpectralDecomposition d;
    d.n = n;
    Eigen::MatrixXd u = m.a;
    d.eigenvalues.resize(n);
    lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, u.data(), n, d.eigenvalues.data());
    if (info != 0 || !probe_ok(m.a, u, d.eigenvalues)) {
        // some BLAS kernels return garbage on some CPUs; Eigen's solver is slower but self-contained
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.a);
        if (es.info() != Eigen::Success) {
            std::ostringstream os;
            os << "eigensolver failed (info " << info << ", max|a_ij| " << m.a.cwiseAbs().maxCoeff()
               << ", Frobenius norm " << m.a.norm() << ")";
            throw NumericError(os.str());
        }
        u = es.eigenvectors();
        d.eigenvalues = es.eigenvalues();
    }
    double norm = std::max(std::abs(d.eigenvalues(0)), std::abs(d.eigenvalues(n - 1)));
    double thr = degeneracy_tol * std::max(norm, 1e-300);
    CounterRng rng(stream_key(rotation_key, static_cast<std::uint64_t>(n), 0, 3));
    int start = 0;
    for (int j = 1; j <= n; ++j) {
        if (j < n && d.eigenvalues(j) - d.eigenvalues(j - 1) < thr) continue;
        int k = j - start;
        if (k > 1) {
            Eigen::MatrixXd q = haar_orthogonal(k, rng);
            u.middleCols(start, k) = u.middleCols(start, k) * q;
            ++d.degenerate_clusters;
        }
        start = j;
    }
    d.overlaps = u.cwiseAbs2();
    d.vectors = std::move(u);
    return d;
}

SpectralDecomposition from_overlaps(const Eigen::MatrixXd& w) {
    SpectralDecomposition d;
    d.n = static_cast<int>(w.rows());
    d.overlaps = w;
    d.eigenvalues.resize(d.n);
    for (int j = 0; j < d.n; ++j) d.eigenvalues(j) = static_cast<double>(j + 1) / d.n;
    return d;
}

SpectralDecomposition sample_decomposition(const EnsembleSpec& spec, int n, std::uint64_t replicate) {
    SymmetricMatrix m = sample_matrix(spec, n, replicate);
    if (spec.kind == EnsembleKind::PermutationBaseline) return from_overlaps(m.a);
    return decompose(m, kDefaultDegeneracyTol, stream_key(spec.seed, static_cast<std::uint64_t>(n), replicate, 4));
}

double ProcessSurface::at(double s, double t) const {
    auto find = [](const std::vector<double>& g, double v) {
        for (std::size_t i = 0; i < g.size(); ++i)
            if (std::abs(g[i] - v) <= 1e-12 * std::max(1.0, std::abs(v))) return static_cast<int>(i);
        throw ParameterError("point is not on the surface grid");
    };
    return values(find(s_grid, s), find(t_grid, t));
}

ProcessSurface bivariate_process(const SpectralDecomposition& dec, const std::vector<double>& s_grid,
                                 const std::vector<double>& t_grid) {
    check_unit_grid(s_grid, "s");
    check_unit_grid(t_grid, "t");
    ProcessSurface p;
    p.s_grid = s_grid;
    p.t_grid = t_grid;
    p.values.resize(s_grid.size(), t_grid.size());
    for (std::size_t a = 0; a < s_grid.size(); ++a) {
        int ks = row_count(dec.n, s_grid[a]);
        Eigen::VectorXd c = column_cumsum_of_rows(dec, ks);
        for (std::size_t b = 0; b < t_grid.size(); ++b)
            p.values(a, b) = surface_value(c, ks, row_count(dec.n, t_grid[b]), dec.n);
    }
    return p;
}

int count_below(const SpectralDecomposition& dec, double lambda) {
    const double* b = dec.eigenvalues.data();
    return static_cast<int>(std::upper_bound(b, b + dec.n, lambda) - b);
}

double empirical_cdf(const SpectralDecomposition& dec, double lambda) {
    return static_cast<double>(count_below(dec, lambda)) / dec.n;
}

ProcessSurface eigenvalue_process(const SpectralDecomposition& dec, const std::vector<double>& s_grid,
                                  const std::vector<double>& lambda_grid) {
    check_unit_grid(s_grid, "s");
    check_grid(lambda_grid, "lambda");
    ProcessSurface p;
    p.s_grid = s_grid;
    p.t_grid = lambda_grid;
    p.on_lambda = true;
    p.values.resize(s_grid.size(), lambda_grid.size());
    for (std::size_t a = 0; a < s_grid.size(); ++a) {
        int ks = row_count(dec.n, s_grid[a]);
        Eigen::VectorXd c = column_cumsum_of_rows(dec, ks);
        for (std::size_t b = 0; b < lambda_grid.size(); ++b)
            p.values(a, b) = surface_value(c, ks, count_below(dec, lambda_grid[b]), dec.n);
    }
    return p;
}

double bivariate_value(const SpectralDecomposition& dec, double s, double t) {
    int ks = row_count(dec.n, s);
    return surface_value(column_cumsum_of_rows(dec, ks), ks, row_count(dec.n, t), dec.n);
}

double eigenvalue_value(const SpectralDecomposition& dec, double s, double lambda) {
    int ks = row_count(dec.n, s);
    return surface_value(column_cumsum_of_rows(dec, ks), ks, count_below(dec, lambda), dec.n);
}

Eigen::VectorXd partial_column_excess(const SpectralDecomposition& dec, double s) {
    int ks = row_count(dec.n, s);
    Eigen::VectorXd c = Eigen::VectorXd::Constant(dec.n, -static_cast<double>(ks) / dec.n);
    if (ks > 0) c += dec.overlaps.topRows(ks).colwise().sum().transpose();
    return c;
}

ResolventStat resolvent_stat(const SpectralDecomposition& dec, double s, cplx z) {
    if (z.imag() == 0.0) throw DomainError("resolvent_stat needs Im z != 0");
    ResolventStat r{s, z, 0.0};
    int ks = row_count(dec.n, s);
    if (ks == 0 || ks == dec.n) return r;
    Eigen::VectorXd c = partial_column_excess(dec, s);
    cplx acc = 0.0;
    for (int j = 0; j < dec.n; ++j) acc += c(j) / (z - dec.eigenvalues(j));
    r.value = acc / std::sqrt(static_cast<double>(dec.n));
    return r;
}

cplx resolvent_stat_trace(const SymmetricMatrix& m, double s, cplx z) {
    if (z.imag() == 0.0) throw DomainError("resolvent_stat needs Im z != 0");
    const int n = m.n();
    Eigen::MatrixXcd a = z * Eigen::MatrixXcd::Identity(n, n) - m.a.cast<cplx>();
    Eigen::MatrixXcd g = a.partialPivLu().inverse();
    int ks = row_count(n, s);
    cplx part = 0.0, tr = 0.0;
    for (int i = 0; i < n; ++i) {
        if (i < ks) part += g(i, i);
        tr += g(i, i);
    }
    return (part - (static_cast<double>(ks) / n) * tr) / std::sqrt(static_cast<double>(n));
}

double quadrature_identity_check(const SpectralDecomposition& dec, double s, cplx z, int) {
    if (z.imag() == 0.0) throw DomainError("quadrature identity needs Im z != 0");
    int ks = row_count(dec.n, s);
    if (ks == 0 || ks == dec.n) return 0.0;
    Eigen::VectorXd c = partial_column_excess(dec, s);
    const double rn = std::sqrt(static_cast<double>(dec.n));
    // C is constant = cum_k on [l_k, l_{k+1}); int dl/(z-l)^2 = 1/(z-b) - 1/(z-a)
    cplx lhs = 0.0;
    double cum = 0.0;
    for (int k = 0; k < dec.n; ++k) {
        cum += c(k);
        cplx left = 1.0 / (z - dec.eigenvalues(k));
        cplx right = (k + 1 < dec.n) ? 1.0 / (z - dec.eigenvalues(k + 1)) : cplx(0.0);
        lhs += (cum / rn) * (right - left);
    }
    return std::abs(lhs + resolvent_stat(dec, s, z).value);
}

double increment(const ProcessSurface& surf, double s, double sp, double t, double tp) {
    return surf.at(sp, tp) - surf.at(s, tp) - surf.at(sp, t) + surf.at(s, t);
}

std::vector<SpectralAtom> vector_spectral_measure(const SpectralDecomposition& dec, int row) {
    if (row < 0 || row >= dec.n) throw ParameterError("row index out of range");
    std::vector<SpectralAtom> out(dec.n);
    for (int j = 0; j < dec.n; ++j) out[j] = {dec.eigenvalues(j), dec.overlaps(row, j)};
    return out;
}

}  // namespace htev
