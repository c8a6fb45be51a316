#include <catch2/catch_amalgamated.hpp>

#include "abfgsm/rng.hpp"
#include "abfgsm/tensor.hpp"

using namespace abfgsm;

namespace {

Tensor random_tensor(Rng& rng, std::size_t n, double lo = -5.0, double hi = 5.0) {
    Tensor t({n});
    for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("sign maps to {-1, 0, +1}", "[tensor]") {
    Tensor t = Tensor::vector({3.2, -0.5, 0.0});
    Tensor s = sign(t);
    CHECK(s[0] == 1.0);
    CHECK(s[1] == -1.0);
    CHECK(s[2] == 0.0);
    CHECK(s.shape() == t.shape());

    Tensor z({4});
    CHECK(sign(z) == z);
}

TEST_CASE("sign is invariant under positive scaling", "[tensor]") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        Tensor t = random_tensor(rng, 16);
        double c = rng.uniform(1e-6, 1e6);
        CHECK(sign(scale(t, c)) == sign(t));
    }
}

TEST_CASE("clip_ball clamps against ball and domain", "[tensor]") {
    Tensor x = Tensor::vector({0.5});

    SECTION("inside ball and domain: unchanged") {
        Tensor y = Tensor::vector({0.55});
        CHECK(clip_ball(y, x, 0.1, 0.0, 1.0) == y);
    }
    SECTION("ball clamp dominates") {
        Tensor y = clip_ball(Tensor::vector({0.9}), x, 0.1, 0.0, 1.0);
        CHECK(y[0] == Catch::Approx(0.6).margin(1e-15));
    }
    SECTION("domain clamp dominates") {
        Tensor y = clip_ball(Tensor::vector({-0.05}), Tensor::vector({0.02}), 0.1, 0.0, 1.0);
        CHECK(y[0] == 0.0);
    }
    SECTION("shape mismatch is an error") {
        CHECK_THROWS_AS(clip_ball(Tensor({2}), Tensor({3}), 0.1, 0.0, 1.0),
                        std::invalid_argument);
    }
}

TEST_CASE("clip_ball is idempotent and respects the L-inf bound", "[tensor]") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = random_tensor(rng, 12, 0.0, 1.0);
        Tensor y = random_tensor(rng, 12, -0.5, 1.5);
        double eps = rng.uniform(0.0, 0.4);
        Tensor c = clip_ball(y, x, eps, 0.0, 1.0);
        CHECK(clip_ball(c, x, eps, 0.0, 1.0) == c);
        CHECK(linf_norm(sub(c, x)) <= eps + 1e-12);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(c[i] >= 0.0);
            CHECK(c[i] <= 1.0);
        }
    }
}

TEST_CASE("norms on a hand-checked vector", "[tensor]") {
    Tensor t = Tensor::vector({3.0, -4.0});
    CHECK(l1_norm(t) == 7.0);
    CHECK(l2_norm(t) == 5.0);
    CHECK(linf_norm(t) == 4.0);

    Tensor z({5});
    CHECK(l1_norm(z) == 0.0);
    CHECK(l2_norm(z) == 0.0);
    CHECK(linf_norm(z) == 0.0);
}

TEST_CASE("norm homogeneity and triangle inequality", "[tensor]") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor a = random_tensor(rng, 10);
        Tensor b = random_tensor(rng, 10);
        double c = rng.uniform(-10.0, 10.0);
        CHECK(l1_norm(scale(a, c)) == Catch::Approx(std::abs(c) * l1_norm(a)).epsilon(1e-12));
        CHECK(l2_norm(scale(a, c)) == Catch::Approx(std::abs(c) * l2_norm(a)).epsilon(1e-12));
        CHECK(linf_norm(scale(a, c)) == Catch::Approx(std::abs(c) * linf_norm(a)).epsilon(1e-12));
        CHECK(l1_norm(add(a, b)) <= l1_norm(a) + l1_norm(b) + 1e-12);
        CHECK(l2_norm(add(a, b)) <= l2_norm(a) + l2_norm(b) + 1e-12);
        CHECK(linf_norm(add(a, b)) <= linf_norm(a) + linf_norm(b) + 1e-12);
    }
}

TEST_CASE("elementwise arithmetic", "[tensor]") {
    CHECK(add(Tensor::vector({1, 2}), Tensor::vector({3, 4})) == Tensor::vector({4, 6}));
    CHECK(square(Tensor::vector({-2, 3})) == Tensor::vector({4, 9}));
    CHECK(scale(Tensor::vector({1, 2}), 0.0) == Tensor::vector({0, 0}));
    CHECK(sub(Tensor::vector({5, 1}), Tensor::vector({2, 2})) == Tensor::vector({3, -1}));
    CHECK(mul(Tensor::vector({2, 3}), Tensor::vector({4, -1})) == Tensor::vector({8, -3}));
    CHECK(maximum(Tensor::vector({1, 5}), Tensor::vector({2, 3})) == Tensor::vector({2, 5}));

    CHECK_THROWS_AS(add(Tensor({2}), Tensor({3})), std::invalid_argument);
    CHECK_THROWS_AS(sqrt_elem(Tensor::vector({-1.0})), std::domain_error);
    CHECK_THROWS_AS(div(Tensor::vector({1.0}), Tensor::vector({0.0})), std::domain_error);

    Tensor q = div(Tensor::vector({1.0}), Tensor::vector({0.0}), 0.5);
    CHECK(q[0] == 2.0);
    CHECK(sqrt_elem(Tensor::vector({4.0, 9.0})) == Tensor::vector({2.0, 3.0}));
}

TEST_CASE("tensor shape validation", "[tensor]") {
    CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
}
