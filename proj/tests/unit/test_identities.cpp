#include <doctest.h>

#include <cmath>

#include "htev/ensembles.hpp"
#include "htev/errors.hpp"
#include "htev/identities.hpp"
#include "htev/rng.hpp"

using namespace htev;
using namespace std::complex_literals;

TEST_CASE("Schur trace identity") {
    SUBCASE("zero matrix") {
        SymmetricMatrix z{Eigen::MatrixXd::Zero(2, 2)};
        SchurResult r = schur_trace_delta(z, Eigen::VectorXd::Ones(2), 0, 1.0i);
        CHECK(std::abs(r.lhs - cplx(0.0, -1.0)) < 1e-15);
        CHECK(std::abs(r.rhs - cplx(0.0, -1.0)) < 1e-15);
    }
    SUBCASE("random 10x10") {
        SymmetricMatrix m = sample_matrix(EnsembleSpec::gaussian(1.0, 1), 10, 0);
        CounterRng rng(5);
        Eigen::VectorXd p(10);
        for (int i = 0; i < 10; ++i) p(i) = rng.normal();
        SchurResult r = schur_trace_delta(m, p, 2, 1.0 + 2.0i);
        CHECK(std::abs(r.lhs - r.rhs) < 1e-10);
    }
    SUBCASE("bound at z = 0.5i") {
        SymmetricMatrix m = sample_matrix(EnsembleSpec::levy(1.5, 1.0, 2), 50, 0);
        CounterRng rng(6);
        Eigen::VectorXd p(50);
        for (int i = 0; i < 50; ++i) p(i) = 2.0 * rng.uniform() - 1.0;
        p(7) = 1.0;
        SchurResult r = schur_trace_delta(m, p, 7, 0.5i);
        CHECK(r.bound == doctest::Approx(10.0));
        CHECK(std::abs(r.lhs) <= 10.0);
        CHECK(r.bound_ok);
    }
    SUBCASE("real z is rejected") {
        SymmetricMatrix m{Eigen::MatrixXd::Identity(3, 3)};
        CHECK_THROWS_AS(schur_trace_delta(m, Eigen::VectorXd::Ones(3), 0, 0.5), DomainError);
    }
}

TEST_CASE("product versus exponential") {
    const double R = product_exp_radius();
    CHECK(R > 0.6);
    CHECK(R < 0.75);
    ProdExpResult zero = prod_exp_gap(std::vector<cplx>(20, 0.0), 20);
    CHECK(zero.gap == 0.0);
    CHECK(zero.bound == 0.0);

    ProdExpResult ones = prod_exp_gap(std::vector<cplx>(100, 1.0), 100);
    CHECK(ones.applicable);
    CHECK(ones.gap == doctest::Approx(std::abs(std::pow(1.01, 100) - std::exp(1.0))).epsilon(1e-10));
    CHECK(ones.bound == doctest::Approx(std::exp(1.01) / 100.0).epsilon(1e-12));
    CHECK(ones.bound_ok);

    ProdExpResult big = prod_exp_gap({cplx(5.0, 3.0), cplx(-1.0, 0.0)}, 4);
    CHECK_FALSE(big.applicable);

    CounterRng rng(11);
    int applicable = 0;
    for (int t = 0; t < 1000; ++t) {
        int n = 1 + static_cast<int>(rng.below(100));
        std::vector<cplx> u(1 + rng.below(30));
        for (auto& v : u) v = std::polar(R * n * rng.uniform(), 2.0 * M_PI * rng.uniform());
        ProdExpResult r = prod_exp_gap(u, n);
        CHECK(r.applicable);
        applicable += r.applicable;
        CHECK(r.bound_ok);
    }
    CHECK(applicable == 1000);
}
