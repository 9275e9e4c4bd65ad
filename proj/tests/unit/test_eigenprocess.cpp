#include <doctest.h>

#include <cmath>

#include "htev/eigenprocess.hpp"
#include "htev/errors.hpp"

using namespace htev;
using namespace std::complex_literals;

namespace {

SpectralDecomposition diag_dec(std::vector<double> d) {
    SymmetricMatrix m{Eigen::VectorXd::Map(d.data(), d.size()).asDiagonal()};
    return decompose(m);
}

double brute_B(const SpectralDecomposition& dec, double s, double t) {
    int n = dec.n;
    double sum = 0;
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i <= std::floor(n * s + 1e-9) && j <= std::floor(n * t + 1e-9)) sum += dec.overlaps(i - 1, j - 1) - 1.0 / n;
    return sum / std::sqrt(static_cast<double>(n));
}

}  // namespace

TEST_CASE("decompose") {
    SUBCASE("identity is fully degenerate and gets a random basis") {
        SymmetricMatrix id{Eigen::MatrixXd::Identity(3, 3)};
        SpectralDecomposition d = decompose(id, kDefaultDegeneracyTol, 17);
        CHECK((d.eigenvalues.array() - 1.0).abs().maxCoeff() < 1e-14);
        CHECK(d.degenerate_clusters == 1);
        CHECK((d.overlaps.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK((d.overlaps.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
        CHECK((d.overlaps - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() > 1e-3);
    }
    SUBCASE("diagonal matrix keeps the basis") {
        SpectralDecomposition d = diag_dec({3.0, 1.0, 2.0});
        CHECK(d.eigenvalues(0) == 1.0);
        CHECK(d.eigenvalues(2) == 3.0);
        CHECK(d.overlaps(1, 0) == doctest::Approx(1.0));
        CHECK(d.overlaps(0, 2) == doctest::Approx(1.0));
        CHECK(d.overlaps(2, 1) == doctest::Approx(1.0));
    }
    SUBCASE("reconstruction of a Gaussian matrix") {
        SymmetricMatrix m = sample_matrix(EnsembleSpec::gaussian(1.0, 5), 50, 0);
        SpectralDecomposition d = decompose(m);
        Eigen::MatrixXd rec = d.vectors * d.eigenvalues.asDiagonal() * d.vectors.transpose();
        CHECK((rec - m.a).cwiseAbs().maxCoeff() < 1e-8);
        for (int j = 1; j < d.n; ++j) CHECK(d.eigenvalues(j - 1) <= d.eigenvalues(j));
        CHECK(d.overlaps.minCoeff() >= 0.0);
        CHECK(d.overlaps.maxCoeff() <= 1.0);
    }
    SUBCASE("Erdos-Renyi degenerate clusters stay doubly stochastic") {
        SpectralDecomposition d = sample_decomposition(EnsembleSpec::erdos_renyi(2.0, 8), 300, 0);
        CHECK(d.degenerate_clusters > 0);
        CHECK((d.overlaps.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
        CHECK((d.overlaps.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("bivariate process") {
    SUBCASE("w = I, n = 2") {
        SpectralDecomposition d = from_overlaps(Eigen::MatrixXd::Identity(2, 2));
        CHECK(bivariate_value(d, 0.5, 0.5) == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(1e-14));
        CHECK(bivariate_value(d, 0.5, 0.5) == doctest::Approx(0.35355).epsilon(1e-5));
    }
    SUBCASE("boundary and brute force") {
        SpectralDecomposition d = sample_decomposition(EnsembleSpec::levy(1.5, 1.0, 2), 37, 1);
        std::vector<double> g = {0.0, 0.2, 0.45, 0.8, 1.0};
        ProcessSurface surf = bivariate_process(d, g, g);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (std::size_t j = 0; j < g.size(); ++j) {
                CHECK(std::abs(surf.values(i, j) - brute_B(d, g[i], g[j])) < 1e-12);
                if (i == 0 || j == 0 || i + 1 == g.size() || j + 1 == g.size()) CHECK(surf.values(i, j) == 0.0);
            }
        CHECK(increment(surf, 0.2, 0.2, 0.0, 1.0) == 0.0);
        CHECK(increment(surf, 0.0, 1.0, 0.0, 1.0) == 0.0);
        double brute = brute_B(d, 0.8, 0.45) - brute_B(d, 0.2, 0.45) - brute_B(d, 0.8, 0.2) + brute_B(d, 0.2, 0.2);
        CHECK(std::abs(increment(surf, 0.2, 0.8, 0.2, 0.45) - brute) < 1e-12);
    }
}

TEST_CASE("eigenvalue process and empirical CDF") {
    SpectralDecomposition d = diag_dec({1.0, 2.0, 3.0});
    CHECK(empirical_cdf(d, 0.5) == 0.0);
    CHECK(empirical_cdf(d, 3.0) == 1.0);
    CHECK(empirical_cdf(d, 2.0) == doctest::Approx(2.0 / 3.0));

    SpectralDecomposition r = sample_decomposition(EnsembleSpec::gaussian(1.0, 4), 40, 0);
    for (double s : {0.1, 0.5, 0.93}) {
        CHECK(eigenvalue_value(r, s, r.eigenvalues(0) - 1.0) == 0.0);
        CHECK(std::abs(eigenvalue_value(r, s, r.eigenvalues(39) + 1.0)) < 1e-14);
        for (double l : {-1.0, -0.2, 0.4, 1.1}) {
            double b = bivariate_value(r, s, empirical_cdf(r, l));
            CHECK(std::abs(eigenvalue_value(r, s, l) - b) < 1e-12);
        }
    }
    std::vector<double> sg = {0.0, 0.5, 1.0}, lg = {-0.5, 0.5};
    ProcessSurface surf = eigenvalue_process(r, sg, lg);
    CHECK(surf.on_lambda);
    CHECK(surf.at(0.5, 0.5) == doctest::Approx(eigenvalue_value(r, 0.5, 0.5)));
}

TEST_CASE("vector spectral measure") {
    SpectralDecomposition d = diag_dec({1.0, 2.0, 3.0});
    auto mu = vector_spectral_measure(d, 1);
    double total = 0;
    for (const auto& a : mu) total += a.weight;
    CHECK(total == doctest::Approx(1.0));
    for (const auto& a : mu) CHECK(a.weight == doctest::Approx(a.lambda == 2.0 ? 1.0 : 0.0));

    // C^n_{s,l} = n^{-1/2} sum_{i <= ns} (mu_i(-inf, l] - F_n(l))
    SpectralDecomposition r = sample_decomposition(EnsembleSpec::erdos_renyi(3.0, 6), 30, 2);
    double s = 0.6, l = 0.3;
    int k = row_count(r.n, s);
    double sum = 0;
    for (int i = 0; i < k; ++i) {
        double mass = 0;
        for (const auto& a : vector_spectral_measure(r, i))
            if (a.lambda <= l) mass += a.weight;
        sum += mass - empirical_cdf(r, l);
    }
    CHECK(std::abs(sum / std::sqrt(30.0) - eigenvalue_value(r, s, l)) < 1e-12);
    CHECK_THROWS_AS(vector_spectral_measure(r, 30), ParameterError);
}

TEST_CASE("resolvent statistic") {
    SymmetricMatrix m = sample_matrix(EnsembleSpec::levy(1.5, 1.0, 9), 30, 0);
    SpectralDecomposition d = decompose(m);
    CHECK(resolvent_stat(d, 0.0, 2.0i).value == cplx(0.0));
    CHECK(resolvent_stat(d, 1.0, 1.0 + 2.0i).value == cplx(0.0));
    for (cplx z : {2.0i, 0.3 + 0.1i, -1.0 - 0.7i}) {
        cplx a = resolvent_stat(d, 0.4, z).value;
        CHECK(std::abs(resolvent_stat(d, 0.4, std::conj(z)).value - std::conj(a)) < 1e-14);
        CHECK(std::abs(a - resolvent_stat_trace(m, 0.4, z)) < 1e-9);
    }
    CHECK_THROWS_AS(resolvent_stat(d, 0.4, 1.0), DomainError);
}

TEST_CASE("quadrature identity") {
    SpectralDecomposition d2 = diag_dec({-0.5, 1.0});
    CHECK(quadrature_identity_check(d2, 0.5, 2.0i) < 1e-12);
    CHECK(quadrature_identity_check(d2, 0.0, 2.0i) == 0.0);
    SpectralDecomposition d = sample_decomposition(EnsembleSpec::levy(1.5, 1.0, 10), 50, 0);
    for (cplx z : {2.0i, 0.1 + 0.3i, -2.0 - 1.0i}) CHECK(quadrature_identity_check(d, 0.35, z) < 1e-9);
}

TEST_CASE("permutation baseline bypasses the eigensolver") {
    SpectralDecomposition d = sample_decomposition(EnsembleSpec::permutation(3), 10, 0);
    CHECK(d.vectors.size() == 0);
    CHECK((d.overlaps.rowwise().sum().array() - 1.0).abs().maxCoeff() == 0.0);
    // placeholder eigenvalues make C^n reduce to B^n
    CHECK(eigenvalue_value(d, 0.5, d.eigenvalues(3)) == doctest::Approx(bivariate_value(d, 0.5, 0.4)));
}
