#include <doctest.h>

#include <cmath>
#include <vector>

#include "astm/random.hpp"

using namespace astm;

TEST_CASE("streams with the same seed replay the same sequence") {
    RandomStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived sub-seeds differ by label and are stable") {
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) != derive_seed(2, 2));
    CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("uniform doubles stay in [0, 1)") {
    RandomStream rs(7);
    for (int i = 0; i < 10000; ++i) {
        const double x = rs.next_double();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("poisson draws match their mean within 3 sigma") {
    RandomStream rs(123);
    const double mean = 4.0;
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rs.poisson(mean));
    const double sample_mean = sum / n;
    const double sigma = std::sqrt(mean / n);
    CHECK(std::abs(sample_mean - mean) < 3.0 * sigma);
}

TEST_CASE("poisson chunking keeps large means unbiased") {
    RandomStream rs(99);
    const double mean = 120.0; // forces the 25-per-chunk path
    const int n = 4000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rs.poisson(mean));
    const double sample_mean = sum / n;
    const double sigma = std::sqrt(mean / n);
    CHECK(std::abs(sample_mean - mean) < 3.0 * sigma);
}

TEST_CASE("poisson of zero mean is zero") {
    RandomStream rs(5);
    for (int i = 0; i < 100; ++i) CHECK(rs.poisson(0.0) == 0);
}

TEST_CASE("binomial edge probabilities") {
    RandomStream rs(5);
    CHECK(rs.binomial(50, 0.0) == 0);
    CHECK(rs.binomial(50, 1.0) == 50);
    CHECK(rs.binomial(0, 0.5) == 0);
}

TEST_CASE("binomial mean within 3 sigma") {
    RandomStream rs(321);
    const int n = 2000, trials = 100;
    const double p = 0.3;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += static_cast<double>(rs.binomial(trials, p));
    const double sample_mean = sum / n;
    const double sigma = std::sqrt(trials * p * (1 - p) / n);
    CHECK(std::abs(sample_mean - trials * p) < 3.0 * sigma);
}
