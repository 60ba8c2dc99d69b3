#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bigtan/finsler.hpp"
#include "support/numerical_oracles.hpp"

using bigtan::ArgumentError;
using bigtan::FinslerStructure;
using bigtan::Jet;
using bigtan::JetContext;
using bigtan::ZeroSectionError;

namespace {

Eigen::VectorXd sphere_point(std::mt19937_64& rng, int n, double lo = 0.5, double hi = 2.0) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> radius(lo, hi);
    Eigen::VectorXd y(n);
    do {
        for (int i = 0; i < n; ++i) y[i] = gauss(rng);
    } while (y.norm() < 1e-8);
    return radius(rng) * y.normalized();
}

Eigen::VectorXd box_point(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = u(rng);
    return x;
}

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

FinslerStructure family_by_index(int which, int n) {
    switch (which) {
        case 0: return FinslerStructure::euclidean(n);
        case 1: return FinslerStructure::conformal(n, 0.1);
        default: {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[0] = 0.5;
            return FinslerStructure::randers(n, b);
        }
    }
}

}  // namespace

TEST_CASE("euclidean values and fundamental data") {
    auto s = FinslerStructure::euclidean(2);
    const std::vector<double> x{0.0, 0.0};
    const std::vector<double> y{3.0, 4.0};
    CHECK(s.f2(x, y) == doctest::Approx(25.0));

    auto d = s.fundamental_data(x, y);
    CHECK(d.F2 == doctest::Approx(25.0));
    CHECK(d.y_lower[0] == doctest::Approx(3.0));
    CHECK(d.y_lower[1] == doctest::Approx(4.0));
    CHECK((d.g - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) CHECK(std::abs(d.cartan(i, j, k)) < 1e-14);
        }
    }
}

TEST_CASE("conformal factor at the origin and away from it") {
    auto s = FinslerStructure::conformal(2, 0.1);
    const std::vector<double> x0{0.0, 0.0};
    const std::vector<double> y{1.0, 0.0};
    CHECK(s.f2(x0, y) == doctest::Approx(1.0));

    const std::vector<double> x1{0.7, -0.3};
    const double factor = std::exp(2.0 * 0.1 * std::sin(0.7));
    CHECK(s.f2(x1, y) == doctest::Approx(factor));

    auto d = s.fundamental_data(x1, y);
    CHECK((d.g - factor * Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("randers value example and closed-form fundamental tensor") {
    Eigen::VectorXd b(2);
    b << 0.5, 0.0;
    auto s = FinslerStructure::randers(2, b);
    const std::vector<double> x{0.0, 0.0};
    const std::vector<double> y{1.0, 0.0};
    CHECK(s.f2(x, y) == doctest::Approx(2.25));  // (|y| + b.y)^2 = 1.5^2

    std::mt19937_64 rng(41);
    for (int n = 2; n <= 4; ++n) {
        Eigen::VectorXd bn = Eigen::VectorXd::Zero(n);
        bn[0] = 0.5;
        if (n > 2) bn[1] = -0.2;
        auto sn = FinslerStructure::randers(n, bn);
        for (int it = 0; it < 40; ++it) {
            const Eigen::VectorXd xx = box_point(rng, n);
            const Eigen::VectorXd yy = sphere_point(rng, n);
            auto d = sn.fundamental_data(as_span(xx), as_span(yy));
            const Eigen::MatrixXd ref = oracle::randers_fundamental_closed_form(yy, bn);
            CHECK((d.g - ref).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
}

TEST_CASE("fiber partials match finite differences for every family") {
    std::mt19937_64 rng(4242);
    for (int which = 0; which < 3; ++which) {
        for (int n : {2, 3}) {
            auto s = family_by_index(which, n);
            for (int it = 0; it < 34; ++it) {  // ~100 points per family over both dims
                const Eigen::VectorXd x = box_point(rng, n);
                Eigen::VectorXd y = sphere_point(rng, n);
                if (which == 2) {
                    while (s.f2(as_span(x), as_span(y)) < 0.04) y = sphere_point(rng, n);
                }
                JetContext ctx(n, 3);
                const Jet f2 = s.f2_jet(as_span(x), as_span(y), ctx);

                auto fd_fn = [&](const std::vector<double>& yy) {
                    return s.f2(as_span(x), yy);
                };
                std::vector<double> at(y.data(), y.data() + n);
                std::vector<int> multi(n, 0);
                // every first, second and third fiber partial
                auto sweep = [&](auto&& self, int start, int remaining) -> void {
                    if (remaining == 0) {
                        int total = 0;
                        for (int m : multi) total += m;
                        if (total == 0) return;
                        const double jet_val = f2.partial(multi);
                        const double fd_val = oracle::fd_partial(fd_fn, at, multi);
                        CHECK_MESSAGE(oracle::fd_agrees(jet_val, fd_val), "family=", which,
                                      " n=", n, " jet=", jet_val, " fd=", fd_val);
                        return;
                    }
                    for (int v = start; v < n; ++v) {
                        multi[v] += 1;
                        self(self, v, remaining - 1);
                        multi[v] -= 1;
                    }
                    self(self, n, 0);
                };
                sweep(sweep, 0, 3);
            }
        }
    }
}

TEST_CASE("euler identities hold at sampled points") {
    std::mt19937_64 rng(99);
    for (int which = 0; which < 3; ++which) {
        for (int n : {2, 3}) {
            auto s = family_by_index(which, n);
            double worst = 0.0;
            for (int it = 0; it < 50; ++it) {
                const Eigen::VectorXd x = box_point(rng, n);
                const Eigen::VectorXd y = sphere_point(rng, n);
                worst = std::max(worst, s.euler_identity_check(as_span(x), as_span(y)).max());
            }
            CHECK_MESSAGE(worst < 1e-10, "family=", which, " n=", n, " worst=", worst);
        }
    }
}

TEST_CASE("fundamental tensor stays positive definite on samples") {
    std::mt19937_64 rng(7);
    for (int which = 0; which < 3; ++which) {
        auto s = family_by_index(which, 3);
        for (int it = 0; it < 50; ++it) {
            const Eigen::VectorXd x = box_point(rng, 3);
            const Eigen::VectorXd y = sphere_point(rng, 3);
            auto d = s.fundamental_data(as_span(x), as_span(y));
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.g);
            CHECK(es.eigenvalues().minCoeff() > 0.0);
            CHECK((d.g * d.g_inv - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() <
                  1e-12);
        }
    }
}

TEST_CASE("construction and zero-section guards") {
    CHECK_THROWS_AS(FinslerStructure::euclidean(1), ArgumentError);
    CHECK_THROWS_AS(FinslerStructure::euclidean(5), ArgumentError);

    Eigen::VectorXd b_long(2);
    b_long << 0.8, 0.7;
    CHECK_THROWS_AS(FinslerStructure::randers(2, b_long), ArgumentError);
    Eigen::VectorXd b_wrong(3);
    b_wrong << 0.1, 0.1, 0.1;
    CHECK_THROWS_AS(FinslerStructure::randers(2, b_wrong), ArgumentError);

    auto s = FinslerStructure::euclidean(2);
    const std::vector<double> x{0.0, 0.0};
    const std::vector<double> zero{0.0, 0.0};
    CHECK_THROWS_AS(s.f2(x, zero), ZeroSectionError);
    CHECK_THROWS_AS(s.fundamental_data(x, zero), ZeroSectionError);

    CHECK_THROWS_AS(s.with_linear_chart(Eigen::MatrixXd::Zero(2, 2)), ArgumentError);
    CHECK_THROWS_AS(s.with_linear_chart(Eigen::MatrixXd::Identity(3, 3)), ArgumentError);
}

TEST_CASE("linear chart composition evaluates the pulled-back norm") {
    std::mt19937_64 rng(55);
    Eigen::MatrixXd a(2, 2);
    a << 2.0, 1.0, 0.0, 1.0;
    auto s = FinslerStructure::euclidean(2).with_linear_chart(a);
    for (int it = 0; it < 20; ++it) {
        const Eigen::VectorXd x = box_point(rng, 2);
        const Eigen::VectorXd y = sphere_point(rng, 2);
        const Eigen::VectorXd ay = a * y;
        // F~(A y) = F(y)
        CHECK(s.f2(as_span(x), as_span(ay)) ==
              doctest::Approx(y.squaredNorm()).epsilon(1e-12));
    }
}
