#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bigtan/bigtangent.hpp"

using namespace bigtan;

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

Eigen::VectorXd sphere_point(std::mt19937_64& rng, int n, double lo = 0.6, double hi = 2.0) {
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

VerticalVector random_vertical(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    VerticalVector v = VerticalVector::zero(n);
    for (int i = 0; i < n; ++i) {
        v.comp1[i] = gauss(rng);
        v.comp2[i] = gauss(rng);
    }
    return v;
}

FinslerStructure family_by_index(int which, int n) {
    switch (which) {
        case 0: return FinslerStructure::euclidean(n);
        case 1: return FinslerStructure::conformal(n, 0.1);
        default: {
            Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
            b[0] = 0.5;
            if (n > 2) b[1] = -0.2;
            return FinslerStructure::randers(n, b);
        }
    }
}

VerticalMetricData euclid_fixture() {
    auto s = FinslerStructure::euclidean(2);
    CartanDual d(s);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd y(2), p(2);
    y << 1.0, 0.0;
    p << 0.0, 2.0;
    return VerticalMetricData::at(s, d, {x, y, p});
}

}  // namespace

TEST_CASE("metric blocks and norms at the flat fixture") {
    const auto m = euclid_fixture();
    CHECK(m.F2 == doctest::Approx(1.0));
    CHECK(m.K2 == doctest::Approx(4.0));
    CHECK(std::abs(m.norm_E * m.norm_E - (m.F2 + m.K2)) < 1e-12);

    const auto fields = liouville_fields(m);
    CHECK(metric_G(m, fields.e, fields.e) == doctest::Approx(5.0));
    CHECK(metric_G(m, fields.e1, fields.e1) == doctest::Approx(m.F2));
    CHECK(metric_G(m, fields.e2, fields.e2) == doctest::Approx(m.K2));

    // the two blocks never pair with each other
    VerticalVector a = VerticalVector::zero(2);
    VerticalVector b = VerticalVector::zero(2);
    a.comp1[0] = 1.0;
    b.comp2[0] = 1.0;
    CHECK(metric_G(m, a, b) == 0.0);
}

TEST_CASE("euler combination at the flat fixture") {
    const auto m = euclid_fixture();
    const auto fields = liouville_fields(m);
    CHECK(fields.e_prime.comp1[0] == doctest::Approx(4.0));
    CHECK(fields.e_prime.comp1[1] == doctest::Approx(0.0));
    CHECK(fields.e_prime.comp2[0] == doctest::Approx(0.0));
    CHECK(fields.e_prime.comp2[1] == doctest::Approx(-2.0));
}

TEST_CASE("form components at the flat fixture") {
    const auto m = euclid_fixture();
    const double root5 = std::sqrt(5.0);
    CHECK(zeta_lower(m)[0] == doctest::Approx(1.0 / root5));
    CHECK(zeta_lower(m)[1] == doctest::Approx(0.0));
    CHECK(zeta_upper(m)[0] == doctest::Approx(0.0));
    CHECK(zeta_upper(m)[1] == doctest::Approx(2.0 / root5));

    const auto fields = liouville_fields(m);
    CHECK(liouville_forms(m, fields.e).zeta == doctest::Approx(root5));
}

TEST_CASE("projector blocks at the flat fixture") {
    const auto m = euclid_fixture();

    // columns of the four blocks, read off by projecting basis vectors
    VerticalVector v = VerticalVector::zero(2);
    v.comp1[0] = 1.0;
    auto p_col = projector_P(m, v, ProjectorKind::P);
    CHECK(p_col.comp1[0] == doctest::Approx(0.8));
    CHECK(p_col.comp1[1] == doctest::Approx(0.0));
    CHECK(p_col.comp2[0] == doctest::Approx(0.0));
    CHECK(p_col.comp2[1] == doctest::Approx(-0.4));  // the mixed lower block

    v = VerticalVector::zero(2);
    v.comp1[1] = 1.0;
    p_col = projector_P(m, v, ProjectorKind::P);
    CHECK(p_col.comp1[1] == doctest::Approx(1.0));
    CHECK(max_abs(p_col - v) < 1e-15);

    v = VerticalVector::zero(2);
    v.comp2[1] = 1.0;
    p_col = projector_P(m, v, ProjectorKind::P);
    CHECK(p_col.comp2[1] == doctest::Approx(0.2));
    CHECK(p_col.comp1[0] == doctest::Approx(-0.4));  // the mixed upper block

    const auto fields = liouville_fields(m);
    CHECK(max_abs(projector_P(m, fields.e, ProjectorKind::P)) < 1e-14);
    CHECK(max_abs(projector_P(m, fields.e1, ProjectorKind::P1)) < 1e-14);
    CHECK(max_abs(projector_P(m, fields.e2, ProjectorKind::P2)) < 1e-14);
}

TEST_CASE("positive pairing on random vertical vectors") {
    std::mt19937_64 rng(11);
    Eigen::VectorXd b(2);
    b << 0.5, 0.0;
    auto s = FinslerStructure::randers(2, b);
    CartanDual d(s);
    for (int it = 0; it < 20; ++it) {
        const auto m = VerticalMetricData::at(
            s, d, {box_point(rng, 2), sphere_point(rng, 2), sphere_point(rng, 2)});
        CHECK(m.F2 > 0.0);
        CHECK(m.K2 > 0.0);
        for (int jt = 0; jt < 5; ++jt) {
            const auto X = random_vertical(rng, 2);
            CHECK(metric_G(m, X, X) > 0.0);
        }
    }
}

TEST_CASE("euler directions pair as the squared norms dictate") {
    std::mt19937_64 rng(23);
    for (int which = 0; which < 3; ++which) {
        for (int n : {2, 3}) {
            auto s = family_by_index(which, n);
            CartanDual d(s);
            for (int it = 0; it < 10; ++it) {
                const auto m = VerticalMetricData::at(
                    s, d, {box_point(rng, n), sphere_point(rng, n), sphere_point(rng, n)});
                const auto fields = liouville_fields(m);
                const double n2 = m.F2 + m.K2;
                CHECK(std::abs(metric_G(m, fields.e, fields.e) - n2) < 1e-8 * n2);
                CHECK(std::abs(metric_G(m, fields.e_prime, fields.e)) < 1e-8 * n2 * n2);
                const double ep_ep = m.F2 * m.K2 * n2;
                CHECK(std::abs(metric_G(m, fields.e_prime, fields.e_prime) - ep_ep) <
                      1e-9 * std::max(1.0, ep_ep) * 10);
            }
        }
    }
}

TEST_CASE("form and projector relations on random vectors") {
    std::mt19937_64 rng(37);
    for (int which = 0; which < 3; ++which) {
        auto s = family_by_index(which, 2);
        CartanDual d(s);
        for (int it = 0; it < 15; ++it) {
            const auto m = VerticalMetricData::at(
                s, d, {box_point(rng, 2), sphere_point(rng, 2), sphere_point(rng, 2)});
            const auto fields = liouville_fields(m);
            const double f = std::sqrt(m.F2);
            const double k = std::sqrt(m.K2);
            const double n2 = m.F2 + m.K2;
            for (int jt = 0; jt < 5; ++jt) {
                const auto X = random_vertical(rng, 2);
                const auto forms = liouville_forms(m, X);

                // the full form is the norm-weighted mean of the block forms
                CHECK(std::abs(forms.zeta - (f * forms.zeta1 + k * forms.zeta2) / m.norm_E) <
                      1e-10);

                // the full projector against its block pieces
                const auto lhs = projector_P(m, X, ProjectorKind::P);
                const auto rhs = projector_P(m, X, ProjectorKind::P1) +
                                 projector_P(m, X, ProjectorKind::P2) +
                                 ((forms.zeta1 / f - forms.zeta2 / k) / n2) *
                                     (m.K2 * fields.e1 - m.F2 * fields.e2);
                CHECK(max_abs(lhs - rhs) < 1e-10);
            }
        }
    }
}

TEST_CASE("decomposition residuals across families") {
    std::mt19937_64 rng(53);
    for (int which = 0; which < 3; ++which) {
        for (int n : {2, 3}) {
            auto s = family_by_index(which, n);
            CartanDual d(s);
            const double bound = which == 0 ? 1e-10 : 1e-9;
            for (int it = 0; it < 12; ++it) {
                const auto m = VerticalMetricData::at(
                    s, d, {box_point(rng, n), sphere_point(rng, n), sphere_point(rng, n)});
                const auto X = random_vertical(rng, n);
                const auto Y = random_vertical(rng, n);
                const auto report = decomposition_checks(m, X, Y);
                CHECK_MESSAGE(report.max() < bound, "family=", which, " n=", n,
                              " worst=", report.max());
            }
        }
    }
}

TEST_CASE("chart transport leaves every scalar alone") {
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (int which : {0, 2}) {
        for (int trial = 0; trial < 5; ++trial) {
            const int n = 2;
            auto s = family_by_index(which, n);
            CartanDual d(s);

            Eigen::MatrixXd a(n, n);
            do {
                a = Eigen::MatrixXd::Identity(n, n);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) a(i, j) += u(rng);
            } while (std::abs(a.determinant()) < 0.3);
            const Eigen::MatrixXd a_inv_t = a.inverse().transpose();

            auto s_chart = s.with_linear_chart(a);
            CartanDual d_chart(s_chart);

            const Eigen::VectorXd x = box_point(rng, n);
            const Eigen::VectorXd y = sphere_point(rng, n);
            const Eigen::VectorXd p = sphere_point(rng, n);
            const auto m = VerticalMetricData::at(s, d, {x, y, p});
            const auto mt = VerticalMetricData::at(
                s_chart, d_chart, {a * x, a * y, a_inv_t * p});

            CHECK(std::abs(m.F2 - mt.F2) < 1e-9 * std::max(1.0, m.F2));
            CHECK(std::abs(m.K2 - mt.K2) < 1e-9 * std::max(1.0, m.K2));

            for (int jt = 0; jt < 5; ++jt) {
                const auto X = random_vertical(rng, n);
                const auto Y = random_vertical(rng, n);
                const VerticalVector Xt{a * X.comp1, a_inv_t * X.comp2};
                const VerticalVector Yt{a * Y.comp1, a_inv_t * Y.comp2};
                CHECK(std::abs(metric_G(m, X, Y) - metric_G(mt, Xt, Yt)) <
                      1e-9 * std::max(1.0, std::abs(metric_G(m, X, Y))));
                CHECK(std::abs(liouville_forms(m, X).zeta - liouville_forms(mt, Xt).zeta) <
                      1e-9);
            }
        }
    }
}

TEST_CASE("construction guards") {
    auto s = FinslerStructure::euclidean(2);
    CartanDual d(s);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
    Eigen::VectorXd y(2), p(2), zero(2);
    y << 1.0, 0.0;
    p << 0.0, 2.0;
    zero << 0.0, 0.0;
    CHECK_THROWS_AS(VerticalMetricData::at(s, d, {x, zero, p}), ZeroSectionError);
    CHECK_THROWS_AS(VerticalMetricData::at(s, d, {x, y, zero}), ZeroSectionError);
    Eigen::VectorXd y3 = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(VerticalMetricData::at(s, d, {x, y3, p}), ArgumentError);

    const auto m = euclid_fixture();
    VerticalVector bad{Eigen::VectorXd::Ones(3), Eigen::VectorXd::Ones(3)};
    CHECK_THROWS_AS(metric_G(m, bad, bad), ArgumentError);
    CHECK_THROWS_AS(projector_P(m, bad, ProjectorKind::P), ArgumentError);
}
