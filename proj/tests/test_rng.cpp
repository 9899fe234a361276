#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "atmp/rng.hpp"

using namespace atmp;

TEST_CASE("same key gives the same sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.raw() == b.raw());
}

TEST_CASE("different keys give different sequences") {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 64; ++i)
        if (a.raw() == b.raw()) ++equal;
    CHECK(equal == 0);
}

TEST_CASE("children never consume from the parent") {
    Rng a(7), b(7);
    Rng c = a.child(3);
    (void)c.raw();
    (void)c.raw();
    for (int i = 0; i < 16; ++i) CHECK(a.raw() == b.raw());
}

TEST_CASE("child streams are order independent") {
    Rng root(9);
    Rng c1 = root.child(1);
    Rng c2 = root.child(2);
    (void)c2.raw();
    Rng c1_again = root.child(1);
    CHECK(c1.raw() == c1_again.raw());
}

TEST_CASE("child paths with distinct words are distinct") {
    Rng root(11);
    std::set<std::uint64_t> keys;
    keys.insert(root.child(1).key());
    keys.insert(root.child(2).key());
    keys.insert(root.child(1, 0).key());
    keys.insert(root.child(1, 1).key());
    keys.insert(root.child(1, 1, 0).key());
    keys.insert(root.child({1, 1, 0, 5}).key());
    CHECK(keys.size() == 6);
}

TEST_CASE("uniform01 stays in the half-open unit interval") {
    Rng r(123);
    for (int i = 0; i < 10000; ++i) {
        double u = r.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("uniform respects its bounds") {
    Rng r(5);
    for (int i = 0; i < 1000; ++i) {
        double u = r.uniform(-2.5, 3.5);
        CHECK(u >= -2.5);
        CHECK(u < 3.5);
    }
}

TEST_CASE("uniform_index covers the range without bias artifacts") {
    Rng r(77);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 50000; ++i) ++counts[r.uniform_index(5)];
    for (int c : counts) {
        CHECK(c > 9000);
        CHECK(c < 11000);
    }
}

TEST_CASE("uniform_index of one is always zero") {
    Rng r(3);
    for (int i = 0; i < 100; ++i) CHECK(r.uniform_index(1) == 0);
}

TEST_CASE("normal has roughly standard moments") {
    Rng r(2024);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = r.normal();
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("exponential is positive with mean near one") {
    Rng r(31);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = r.exponential();
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(std::abs(sum / n - 1.0) < 0.02);
}

TEST_CASE("laplace is symmetric with variance two") {
    Rng r(99);
    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = r.laplace();
        sum += x;
        sumsq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.03);
    CHECK(std::abs(sumsq / n - 2.0) < 0.08);
}

TEST_CASE("key accessor reports the construction key") {
    CHECK(Rng(0xdeadbeefULL).key() == 0xdeadbeefULL);
}
