#include <doctest.h>

#include <cmath>

#include "htev/ensembles.hpp"
#include "htev/errors.hpp"
#include "htev/philib.hpp"
#include "htev/rng.hpp"

using namespace htev;
using namespace std::complex_literals;

TEST_CASE("permutation baseline is a permutation matrix") {
    SymmetricMatrix m = sample_matrix(EnsembleSpec::permutation(5), 3, 0);
    REQUIRE(m.n() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(m.a.row(i).sum() == 1.0);
        CHECK(m.a.col(i).sum() == 1.0);
        for (int j = 0; j < 3; ++j) CHECK((m.a(i, j) == 0.0 || m.a(i, j) == 1.0));
    }
}

TEST_CASE("sampling is reproducible and replicate streams differ") {
    EnsembleSpec spec = EnsembleSpec::levy(1.5, 1.0, 42);
    SymmetricMatrix a = sample_matrix(spec, 20, 3), b = sample_matrix(spec, 20, 3), c = sample_matrix(spec, 20, 4);
    CHECK(a.a == b.a);
    CHECK(a.a != c.a);
    CHECK((a.a - a.a.transpose()).norm() == 0.0);
}

TEST_CASE("Erdos-Renyi entry moments") {
    const int n = 1000, reps = 5;
    EnsembleSpec spec = EnsembleSpec::erdos_renyi(2.0, 9);
    double sum = 0, sq = 0;
    long cnt = 0;
    for (int r = 0; r < reps; ++r) {
        SymmetricMatrix m = sample_matrix(spec, n, r);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                sum += m.a(i, j);
                sq += m.a(i, j) * m.a(i, j);
                ++cnt;
            }
    }
    double mean = sum / cnt, second = n * sq / cnt;
    // edges are ~Poisson(cnt * 2/n): relative error of n E a^2 is 1/sqrt(edges)
    double edges = cnt * 2.0 / n;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(2.0 / n / cnt));
    CHECK(std::abs(second - 2.0 * (1.0 - 2.0 / n)) < 3.0 * 2.0 / std::sqrt(edges));
}

TEST_CASE("Levy raw magnitudes follow the Pareto tail") {
    EnsembleSpec spec = EnsembleSpec::levy(1.0, 1.0, 3);
    const int n = 777, draws = 200000;
    CounterRng rng(stream_key(3, 99));
    int hits = 0;
    for (int k = 0; k < draws; ++k)
        if (std::abs(sample_entry(spec, n, rng)) * n >= 10.0) ++hits;
    double p = static_cast<double>(hits) / draws;
    CHECK(std::abs(p - 0.1) < 4.0 * std::sqrt(0.09 / draws));
}

TEST_CASE("invalid specs are rejected") {
    CHECK_THROWS_AS(EnsembleSpec::levy(2.5).validate(), ParameterError);
    CHECK_THROWS_AS(EnsembleSpec::erdos_renyi(-1.0).validate(), ParameterError);
    CHECK_THROWS_AS(EnsembleSpec::exploding({}).validate(), ParameterError);
    CHECK(ensemble_kind_from_string(to_string(EnsembleKind::ErdosRenyi)) == EnsembleKind::ErdosRenyi);
}

TEST_CASE("characteristic exponent estimates") {
    SUBCASE("zero at lambda = 0") {
        auto e = estimate_char_exponent(EnsembleSpec::erdos_renyi(2.0, 1), 500, 1000, {0.0});
        CHECK(e[0].value == cplx(0.0, 0.0));
    }
    SUBCASE("Erdos-Renyi at lambda = 1") {
        const int n = 2000;
        auto e = estimate_char_exponent(EnsembleSpec::erdos_renyi(2.0, 2), n, 400000, {1.0});
        cplx want = 2.0 * (std::exp(-1.0i) - 1.0);
        CHECK(std::abs(e[0].value.real() - want.real()) < 3.0 * e[0].stderr_re + 4.0 / n);
        CHECK(std::abs(e[0].value.imag() - want.imag()) < 3.0 * e[0].stderr_im + 4.0 / n);
    }
    SUBCASE("Levy at lambda = -2i") {
        EnsembleSpec spec = EnsembleSpec::levy(1.0, 1.0, 4);
        // a^2 only matters where |x| ~ n, a 1/n event, so keep n small against the sample count
        auto e = estimate_char_exponent(spec, 1000, 2000000, {-2.0i});
        cplx want = phi_eval(PhiModel::from_spec(spec), -2.0i);
        CHECK(std::abs(want + std::sqrt(2.0) * levy_phi_sigma(1.0, 1.0)) < 1e-12);
        CHECK(std::abs(e[0].value.real() - want.real()) < 3.0 * e[0].stderr_re);
        CHECK(std::abs(e[0].value.imag()) < 1e-12);
    }
}
