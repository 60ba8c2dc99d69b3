#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bigtan/jets.hpp"
#include "support/numerical_oracles.hpp"

using bigtan::ArgumentError;
using bigtan::Jet;
using bigtan::JetContext;
using bigtan::SingularityError;

namespace {

Jet random_jet(const JetContext& ctx, std::mt19937_64& rng, double value_floor = 0.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Jet acc = Jet::constant(ctx, u(rng));
    for (int v = 0; v < ctx.num_vars(); ++v) {
        Jet x = Jet::variable(ctx, v, u(rng));
        acc = acc + x * u(rng) + x * x * u(rng);
    }
    if (value_floor > 0.0 && std::abs(acc.value()) < value_floor) {
        acc = acc + (acc.value() < 0 ? -2.0 * value_floor : 2.0 * value_floor);
    }
    return acc;
}

double max_abs_diff(const Jet& a, const Jet& b) {
    REQUIRE(a.context() == b.context());
    double m = 0.0;
    for (int k = 0; k < a.context().monomial_count(); ++k) {
        m = std::max(m, std::abs(a.coeff(k) - b.coeff(k)));
    }
    return m;
}

}  // namespace

TEST_CASE("context monomial layout") {
    JetContext c22(2, 2);
    CHECK(c22.monomial_count() == 6);
    JetContext c34(3, 4);
    CHECK(c34.monomial_count() == 35);

    // graded layout: degree-1 block lists the variables in order
    CHECK(c22.degree(0) == 0);
    CHECK(c22.exponents(1)[0] == 1);
    CHECK(c22.exponents(1)[1] == 0);
    CHECK(c22.exponents(2)[0] == 0);
    CHECK(c22.exponents(2)[1] == 1);

    // truncation is a prefix: shared layout across orders
    JetContext c32 = JetContext(3, 4).truncated(2);
    JetContext c32b(3, 2);
    CHECK(c32 == c32b);
    for (int k = 0; k < c32.monomial_count(); ++k) {
        for (int v = 0; v < 3; ++v) {
            CHECK(c32.exponents(k)[v] == c34.exponents(k)[v]);
        }
    }
}

TEST_CASE("variable seeding") {
    JetContext ctx(2, 2);
    Jet v = Jet::variable(ctx, 0, 3.0);
    CHECK(v.value() == 3.0);
    CHECK(v.coeff(1) == 1.0);
    for (int k = 2; k < ctx.monomial_count(); ++k) CHECK(v.coeff(k) == 0.0);

    JetContext big(3, 4);
    Jet w = Jet::variable(big, 2, -1.5);
    CHECK(big.monomial_count() == 35);
    CHECK(w.value() == -1.5);
    int nonzero = 0;
    for (int k = 0; k < big.monomial_count(); ++k) {
        if (w.coeff(k) != 0.0) ++nonzero;
    }
    CHECK(nonzero == 2);  // the value part and the single linear slot
    CHECK(w.coeff(3) == 1.0);
}

TEST_CASE("product and quotient examples") {
    JetContext ctx(2, 2);
    Jet v = Jet::variable(ctx, 0, 2.0);
    Jet sq = v * v;
    CHECK(sq.value() == doctest::Approx(4.0));
    CHECK(sq.coeff(1) == doctest::Approx(4.0));
    CHECK(sq.coeff(2) == 0.0);
    CHECK(sq.coeff(3) == doctest::Approx(1.0));

    Jet inv = 1.0 / v;
    CHECK(inv.value() == doctest::Approx(0.5));
    CHECK(inv.coeff(1) == doctest::Approx(-0.25));
    CHECK(inv.coeff(3) == doctest::Approx(0.125));
}

TEST_CASE("square root") {
    JetContext ctx(1, 2);
    Jet c = Jet::constant(ctx, 4.0);
    CHECK(sqrt(c).value() == doctest::Approx(2.0));
    CHECK(sqrt(c).coeff(1) == 0.0);

    Jet v = Jet::variable(ctx, 0, 3.0);
    Jet r = sqrt(v * v);  // recovers the linear jet at positive values
    CHECK(r.value() == doctest::Approx(3.0));
    CHECK(r.coeff(1) == doctest::Approx(1.0));
    CHECK(r.coeff(2) == doctest::Approx(0.0));

    std::mt19937_64 rng(2024);
    JetContext c3(3, 4);
    for (int it = 0; it < 50; ++it) {
        Jet a = random_jet(c3, rng, 0.6);
        Jet pos = a * a + 0.25;
        Jet back = sqrt(pos) * sqrt(pos);
        CHECK(max_abs_diff(back, pos) < 1e-12);
    }
}

TEST_CASE("partial extraction rescales by the multi-index factorial") {
    JetContext c1(1, 2);
    Jet v = Jet::variable(c1, 0, 3.0);
    Jet f = v * v;
    CHECK(f.partial(std::vector<int>{2}) == doctest::Approx(2.0));
    CHECK(f.partial(std::vector<int>{0}) == doctest::Approx(9.0));

    JetContext c2(2, 2);
    Jet a = Jet::variable(c2, 0, 1.0);
    Jet b = Jet::variable(c2, 1, 1.0);
    CHECK((a * b).partial(std::vector<int>{1, 1}) == doctest::Approx(1.0));

    CHECK_THROWS_AS(f.partial(std::vector<int>{3}), ArgumentError);
}

TEST_CASE("ring laws on random jets") {
    std::mt19937_64 rng(77);
    JetContext ctx(3, 3);
    for (int it = 0; it < 100; ++it) {
        Jet a = random_jet(ctx, rng);
        Jet b = random_jet(ctx, rng);
        Jet c = random_jet(ctx, rng);
        CHECK(max_abs_diff(a * b, b * a) < 1e-15);
        CHECK(max_abs_diff((a + b) + c, a + (b + c)) < 1e-13);
        CHECK(max_abs_diff(a * (b + c), a * b + a * c) < 1e-12);
        CHECK(max_abs_diff((a * b) * c, a * (b * c)) < 1e-12);
    }
}

TEST_CASE("division round trip") {
    std::mt19937_64 rng(78);
    JetContext ctx(3, 4);
    for (int it = 0; it < 100; ++it) {
        Jet a = random_jet(ctx, rng);
        Jet b = random_jet(ctx, rng, 0.5);
        Jet q = a / b;
        CHECK(max_abs_diff(q * b, a) < 1e-10);
    }
}

TEST_CASE("truncation commutes with arithmetic") {
    std::mt19937_64 rng(79);
    JetContext c4(4, 4);
    for (int it = 0; it < 30; ++it) {
        Jet a = random_jet(c4, rng);
        Jet b = random_jet(c4, rng, 0.5);
        Jet prod_then_trunc = (a * b).truncated(2);
        Jet trunc_then_prod = a.truncated(2) * b.truncated(2);
        CHECK(max_abs_diff(prod_then_trunc, trunc_then_prod) < 1e-15);

        Jet div_then_trunc = (a / b).truncated(3);
        Jet trunc_then_div = a.truncated(3) / b;
        CHECK(max_abs_diff(div_then_trunc, trunc_then_div) < 1e-14);

        // mixed-order arithmetic truncates to the smaller order
        Jet mixed = a.truncated(2) * b;
        CHECK(mixed.order() == 2);
        CHECK(max_abs_diff(mixed, trunc_then_prod) < 1e-15);
    }
}

TEST_CASE("derivative jets") {
    JetContext ctx(2, 3);
    Jet v0 = Jet::variable(ctx, 0, 2.0);
    Jet v1 = Jet::variable(ctx, 1, 3.0);
    Jet f = v0 * v0 * v1;

    Jet d0 = f.derivative(0);
    CHECK(d0.order() == 2);
    JetContext r = ctx.truncated(2);
    Jet expect = Jet::variable(r, 0, 2.0) * Jet::variable(r, 1, 3.0) * 2.0;
    CHECK(max_abs_diff(d0, expect) < 1e-14);

    Jet d01 = f.derivative(0).derivative(1);
    CHECK(d01.value() == doctest::Approx(4.0));  // d^2(v0^2 v1)/dv0 dv1 = 2 v0
}

TEST_CASE("substitute evaluates the polynomial in jet arithmetic") {
    JetContext poly_ctx(1, 4);
    Jet u = Jet::variable(poly_ctx, 0, 0.0);
    Jet poly = u * u + u * 3.0 + 1.0;  // p(u) = u^2 + 3u + 1 around 0

    JetContext target(2, 3);
    Jet v0 = Jet::variable(target, 0, 0.5);
    Jet v1 = Jet::variable(target, 1, -1.0);
    Jet arg = v0 * v1;
    std::vector<Jet> args{arg};
    Jet composed = bigtan::substitute(poly, args);
    Jet direct = arg * arg + arg * 3.0 + 1.0;
    CHECK(max_abs_diff(composed, direct) < 1e-14);
}

TEST_CASE("jet partials agree with finite differences on a smooth function") {
    // f(y) = sqrt(y0^2 + y1^2 + 1) * (y0 + 2) exercises mul, add and sqrt.
    auto fd_fn = [](const std::vector<double>& y) {
        return std::sqrt(y[0] * y[0] + y[1] * y[1] + 1.0) * (y[0] + 2.0);
    };
    std::mt19937_64 rng(2025);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    JetContext ctx(2, 3);
    for (int it = 0; it < 25; ++it) {
        const std::vector<double> at{u(rng), u(rng)};
        Jet y0 = Jet::variable(ctx, 0, at[0]);
        Jet y1 = Jet::variable(ctx, 1, at[1]);
        Jet f = sqrt(y0 * y0 + y1 * y1 + 1.0) * (y0 + 2.0);
        for (int i = 0; i <= 3; ++i) {
            for (int j = 0; i + j <= 3; ++j) {
                if (i + j == 0) continue;
                const std::vector<int> multi{i, j};
                const double jet_val = f.partial(multi);
                const double fd_val = oracle::fd_partial(fd_fn, at, multi);
                CHECK_MESSAGE(oracle::fd_agrees(jet_val, fd_val),
                              "partial (", i, ",", j, "): jet=", jet_val, " fd=", fd_val);
            }
        }
    }
}

TEST_CASE("error paths") {
    CHECK_THROWS_AS(JetContext(0, 2), ArgumentError);
    CHECK_THROWS_AS(JetContext(2, 0), ArgumentError);
    CHECK_THROWS_AS(JetContext(2, 5), ArgumentError);
    CHECK_THROWS_AS(JetContext(17, 2), ArgumentError);

    JetContext ctx(2, 2);
    CHECK_THROWS_AS(Jet::variable(ctx, 2, 1.0), ArgumentError);
    CHECK_THROWS_AS(Jet::variable(ctx, -1, 1.0), ArgumentError);

    JetContext other(3, 2);
    Jet a = Jet::variable(ctx, 0, 1.0);
    Jet b = Jet::variable(other, 0, 1.0);
    CHECK_THROWS_AS(a + b, ArgumentError);
    CHECK_THROWS_AS(a * b, ArgumentError);

    Jet zero = Jet::variable(ctx, 0, 0.0);
    CHECK_THROWS_AS(a / zero, SingularityError);
    CHECK_THROWS_AS(sqrt(Jet::constant(ctx, -1.0)), SingularityError);
    CHECK_THROWS_AS(sqrt(Jet::constant(ctx, 0.0)), SingularityError);

    CHECK_THROWS_AS(a.derivative(5), ArgumentError);
}
