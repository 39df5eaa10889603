#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fdp/dist.hpp"

using namespace fdp;

TEST_CASE("pmf matches closed-form values") {
    CHECK(nb_pmf({1, 0.5}, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(nb_pmf({2, 0.5}, 2) == doctest::Approx(0.1875).epsilon(1e-12));
    CHECK(nb_pmf({3, 0.25}, 0) == doctest::Approx(0.015625).epsilon(1e-12));
}

TEST_CASE("cdf matches hand values") {
    CHECK(nb_cdf({1, 0.5}, 4) == doctest::Approx(0.96875).epsilon(1e-12));
    CHECK(nb_cdf({2, 0.5}, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(nb_cdf({1, 0.5}, -1) == 0.0);
}

TEST_CASE("survival matches hand values") {
    CHECK(nb_survival({5, 0.5}, 0) == 1.0);
    CHECK(nb_survival({1, 0.5}, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(nb_survival({2, 0.5}, 2) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("quantile matches hand values") {
    CHECK(nb_quantile({1, 0.5}, 0.95) == 4);
    CHECK(nb_quantile({2, 0.5}, 0.95) == 6);
    CHECK(nb_quantile({1, 0.5}, 0.4) == 0);
}

TEST_CASE("cdf agrees with the running sum of pmf") {
    for (double R : {0.125, 0.25, 0.5}) {
        for (std::int64_t d = 1; d <= 50; ++d) {
            const NegBinSpec spec{d, R};
            double sum = 0.0;
            for (std::int64_t k = 0; k <= 500; ++k) {
                sum += nb_pmf(spec, k);
                CHECK(std::fabs(nb_cdf(spec, k) - std::min(1.0, sum)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("quantile/cdf adjunction") {
    for (double R : {0.125, 0.5, 0.875}) {
        for (std::int64_t d : {1, 2, 5, 17, 50}) {
            const NegBinSpec spec{d, R};
            for (double p : {0.001, 0.01, 0.1, 0.3141, 0.5, 0.77, 0.95, 0.999}) {
                const std::int64_t q = nb_quantile(spec, p);
                CHECK(nb_cdf(spec, q) >= p);
                CHECK(nb_cdf(spec, q - 1) < p);
            }
        }
    }
}

TEST_CASE("survival/quantile equivalence over the support") {
    // G_d(k) <= u iff k > quantile(1-u), exhaustively.
    const double u_grid[] = {1e-4, 1e-3, 0.0113, 0.0507, 0.1003, 0.2509,
                             0.5001, 0.7507, 0.9003, 0.9899};
    for (std::int64_t d = 1; d <= 20; ++d) {
        const NegBinSpec spec{d, 0.5};
        for (double u : u_grid) {
            const std::int64_t q = nb_quantile(spec, 1.0 - u);
            for (std::int64_t k = 0; k <= 200; ++k) {
                const bool lhs = nb_survival(spec, k) <= u;
                const bool rhs = k > q;
                CHECK(lhs == rhs);
            }
        }
    }
}

TEST_CASE("quantile is nondecreasing in d") {
    for (double R : {0.25, 0.5}) {
        for (double p : {0.2, 0.5, 0.95}) {
            std::int64_t prev = 0;
            for (std::int64_t d = 1; d <= 50; ++d) {
                const std::int64_t q = nb_quantile({d, R}, p);
                CHECK(q >= prev);
                prev = q;
            }
        }
    }
}

TEST_CASE("pmf sums to one") {
    for (double R : {0.25, 0.5}) {
        for (std::int64_t d : {1, 3, 10}) {
            double sum = 0.0;
            for (std::int64_t k = 0; k <= 2000; ++k) sum += nb_pmf({d, R}, k);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-10));
        }
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(nb_pmf({0, 0.5}, 0), param_error);
    CHECK_THROWS_AS(nb_pmf({1, 0.0}, 0), param_error);
    CHECK_THROWS_AS(nb_pmf({1, 1.0}, 0), param_error);
    CHECK_THROWS_AS(nb_pmf({1, 0.5}, -1), param_error);
    CHECK_THROWS_AS(nb_survival({1, 0.5}, -1), param_error);
    CHECK_THROWS_AS(nb_quantile({1, 0.5}, 0.0), param_error);
    CHECK_THROWS_AS(nb_quantile({1, 0.5}, 1.0), param_error);
}

TEST_CASE("support cap raises instead of saturating") {
    CHECK_THROWS_AS(nb_quantile({50, 0.01}, 0.999, 100), cap_error);
    CHECK_THROWS_AS(nb_cdf({1, 0.5}, 1000, 100), cap_error);
}

TEST_CASE("memoized table agrees with the free functions") {
    const NegBinSpec spec{4, 0.25};
    NbCumulative table(spec);
    for (std::int64_t k = 0; k <= 100; ++k)
        CHECK(table.cdf(k) == nb_cdf(spec, k));
    for (double p : {0.1, 0.5, 0.9, 0.99})
        CHECK(table.quantile(p) == nb_quantile(spec, p));
}

TEST_CASE("large-d log regime stays consistent") {
    // R^d underflows a double here; the cdf must still be usable.
    const NegBinSpec spec{2000, 0.5};
    const std::int64_t q = nb_quantile(spec, 0.5);
    // Median of NB(d, 1/2) sits near the mean B d = d.
    CHECK(q > 1800);
    CHECK(q < 2200);
    CHECK(nb_cdf(spec, q) >= 0.5);
    CHECK(nb_cdf(spec, q - 1) < 0.5);
}
