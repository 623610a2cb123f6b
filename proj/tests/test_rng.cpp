#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "ipwres/rng.hpp"

using namespace ipwres;

TEST_CASE("philox4x64-10 matches independent reference outputs") {
    // Reference blocks generated with an independent Philox 4x64-10
    // implementation (numpy.random.Philox raw output; its counter is
    // pre-incremented, which the chosen counters below account for).
    auto out = Philox4x64::block({1, 0, 0, 0}, {0, 0});
    CHECK(out[0] == 0x02f4ba6408e4d89bULL);
    CHECK(out[1] == 0x3dd62b0b9ca8c5b2ULL);
    CHECK(out[2] == 0x1c8667a55d902e79ULL);
    CHECK(out[3] == 0x907d7a052fd5b4dcULL);

    out = Philox4x64::block({2, 2, 3, 4}, {5, 6});
    CHECK(out[0] == 0x92ab6a0e75619263ULL);
    CHECK(out[1] == 0xd8ff75bdc6bf8f60ULL);
    CHECK(out[2] == 0x450e124938725640ULL);
    CHECK(out[3] == 0x94eb1a7cffd20cbbULL);

    out = Philox4x64::block({0, 0, 0, 0}, {~0ULL, ~0ULL});
    CHECK(out[0] == 0x44b7493d1acfc229ULL);
    CHECK(out[1] == 0x6636af8e997921ddULL);
    CHECK(out[2] == 0x3f73e132b5b3780eULL);
    CHECK(out[3] == 0x605644dde03b01b1ULL);

    out = Philox4x64::block({0x243f6a8885a308d4ULL, 0x13198a2e03707344ULL,
                             0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
                            {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
    CHECK(out[0] == 0x4c8e672094922aa3ULL);
    CHECK(out[1] == 0x527061cd2884102aULL);
    CHECK(out[2] == 0xf4c265b2d783d553ULL);
    CHECK(out[3] == 0x0556e76cb0298c8dULL);
}

TEST_CASE("random field is deterministic and addressable") {
    RandomField a(42), b(42), c(43);
    CHECK(a.uniform(1, 2, 3, 4) == b.uniform(1, 2, 3, 4));
    CHECK(a.uniform(1, 2, 3, 4) != c.uniform(1, 2, 3, 4));
    // Different coordinates give different values.
    std::set<double> seen;
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(a.uniform(i, 0, 0, 0));
    CHECK(seen.size() == 100);
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const double u = a.uniform(0, 1, 2, i);
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("poisson sampling matches its mean and variance") {
    RandomField field(7);
    const double mean = 360.0;  // above the chunking threshold
    const int reps = 2000;
    double sum = 0.0, sum2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        DrawSequence seq(field, r, 0, 0);
        const double k = static_cast<double>(sample_poisson(seq, mean));
        sum += k;
        sum2 += k * k;
    }
    const double m = sum / reps;
    const double v = sum2 / reps - m * m;
    // 4 sigma bands on the Monte Carlo error of mean and variance.
    CHECK(std::abs(m - mean) < 4.0 * std::sqrt(mean / reps));
    CHECK(std::abs(v - mean) < 4.0 * mean * std::sqrt(2.0 / reps) * 1.5);
}

TEST_CASE("poisson edge cases") {
    RandomField field(9);
    DrawSequence seq(field, 0, 0, 0);
    CHECK(sample_poisson(seq, 0.0) == 0);
    CHECK_THROWS_AS(sample_poisson(seq, -1.0), std::invalid_argument);
}
