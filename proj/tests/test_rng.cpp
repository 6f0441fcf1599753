#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "gmbm/rng.hpp"

using gmbm::PhiloxCounter;
using gmbm::RngStream;

TEST_SUITE("rng") {

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
    CHECK(gmbm::philox4x32_10({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(gmbm::philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(gmbm::philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible") {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    RngStream c(42), d(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(c.normal() == d.normal());
}

TEST_CASE("children do not depend on parent consumption") {
    RngStream a(7);
    const RngStream fresh = a.child("graph");
    for (int i = 0; i < 10; ++i) a.next_u32();
    RngStream later = a.child("graph");
    RngStream first = fresh;
    for (int i = 0; i < 100; ++i) REQUIRE(first.next_u64() == later.next_u64());
}

TEST_CASE("distinct children and seeds differ") {
    std::set<std::uint64_t> firsts;
    RngStream root(1);
    for (std::uint64_t t = 0; t < 200; ++t) firsts.insert(root.child(t).next_u64());
    firsts.insert(RngStream(2).next_u64());
    firsts.insert(root.child("a").next_u64());
    firsts.insert(root.child("b").next_u64());
    CHECK(firsts.size() == 203);
}

TEST_CASE("uniform and normal moments") {
    RngStream s(123);
    const int N = 400000;
    double su = 0, sn = 0, sn2 = 0;
    double lo = 1, hi = 0;
    for (int i = 0; i < N; ++i) {
        const double u = s.uniform();
        lo = std::min(lo, u);
        hi = std::max(hi, u);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(lo >= 0.0);
    CHECK(hi < 1.0);
    CHECK(std::abs(su / N - 0.5) < 5 * std::sqrt(1.0 / 12 / N));
    CHECK(std::abs(sn / N) < 5 / std::sqrt(double(N)));
    CHECK(std::abs(sn2 / N - 1.0) < 5 * std::sqrt(2.0 / N));
}

TEST_CASE("chi-square and sign") {
    RngStream s(9);
    const int N = 200000;
    double sum = 0;
    int plus = 0;
    for (int i = 0; i < N; ++i) {
        sum += s.chi_square(5.0);
        plus += s.sign() > 0;
    }
    CHECK(std::abs(sum / N - 5.0) < 5 * std::sqrt(10.0 / N));
    CHECK(std::abs(plus - N / 2.0) < 5 * std::sqrt(N / 4.0));
}

TEST_CASE("hash_name is stable") {
    // FNV-1a 64-bit reference values.
    CHECK(gmbm::hash_name("") == 0xcbf29ce484222325ull);
    CHECK(gmbm::hash_name("a") == 0xaf63dc4c8601ec8cull);
}

}
