#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bigtan/harness.hpp"

// Leaf-level checks: the product-metric connection, the shape of the kernel
// distribution (second fundamental form, mean curvature, flat curvature),
// and the geodesic or non-geodesic behaviour of the Euler combinations.

namespace bigtan {

namespace {

double rel(double err, double scale) { return std::abs(err) / std::max(1.0, std::abs(scale)); }

std::function<double(const RunConfig&)> fixed_tol(double t) {
    return [t](const RunConfig&) { return t; };
}

std::function<double(const RunConfig&)> family_tol(double randers, double others) {
    return [randers, others](const RunConfig& cfg) {
        return cfg.family == MetricFamily::randers ? randers : others;
    };
}

// The frame at the same fiber directions rescaled onto the unit level set
// F^2 + K^2 = 1 (each block carries one half of the norm).
LeafFrame unit_level_frame(SampleWorkspace& ws) {
    const VerticalMetricData md = ws.frame.metric_data();
    const Eigen::VectorXd y_unit = md.point.y / std::sqrt(2.0 * md.F2);
    const Eigen::VectorXd p_unit = md.point.p / std::sqrt(2.0 * md.K2);
    return ws.leaf.frame(ws.leaf.point(y_unit, p_unit));
}

double check_leaf_connection_metric(SampleWorkspace& ws) {
    const LeviCivitaReport lc = ws.connection.levi_civita_check(ws.frame);
    return std::max({lc.compatibility_y, lc.compatibility_p, lc.torsion_y, lc.torsion_p});
}

double check_leaf_radial_contractions(SampleWorkspace& ws) {
    const LeviCivitaReport lc = ws.connection.levi_civita_check(ws.frame);
    return std::max(lc.radial_contraction_y, lc.radial_contraction_p);
}

double check_leaf_lemma_derivatives(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    double r = 0.0;
    for (int pair = 0; pair < 2; ++pair) {
        const VerticalVector X = random_vertical(ws.rng, n);
        const VerticalVector Y = random_vertical(ws.rng, n);
        const double scale = std::max(1.0, max_abs(X)) * std::max(1.0, max_abs(Y));
        r = std::max(r, ws.connection.lemma_checks(ws.frame, X, Y).max() / scale);
    }
    return r;
}

double check_liouville_geodesic(SampleWorkspace& ws) {
    const VerticalMetricData md = ws.frame.metric_data();
    const VerticalVector unit{md.point.y / md.norm_E, md.point.p / md.norm_E};
    const VerticalVector dv =
        ws.connection.covariant_derivative(ws.frame, unit, VerticalField::unit_euler());
    return max_abs(dv);
}

double check_umbilical_form(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();

    double r = 0.0;
    for (int pair = 0; pair < 2; ++pair) {
        const VerticalVector X = random_vertical(ws.rng, n);
        const VerticalVector Y = random_vertical(ws.rng, n);
        const double b = ws.connection.second_fundamental_form(ws.frame, X, Y);
        const VerticalVector px = projector_P(md, X, ProjectorKind::P);
        const VerticalVector py = projector_P(md, Y, ProjectorKind::P);
        const double pairing = metric_G(md, px, py);
        r = std::max(r, rel(b + pairing / md.norm_E, pairing));
        const double b_flip = ws.connection.second_fundamental_form(ws.frame, Y, X);
        r = std::max(r, rel(b - b_flip, pairing));
    }
    return r;
}

double check_indicatrix_form(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const LeafFrame unit = unit_level_frame(ws);
    const VerticalMetricData md = unit.metric_data();

    double r = std::abs(md.norm_E - 1.0);
    for (int j = 0; j < n; ++j) {
        r = std::max(r, std::abs(unit.norm().derivative(j).value() - md.y_lower[j] / md.norm_E));
        r = std::max(r,
                     std::abs(unit.norm().derivative(n + j).value() - md.p_upper[j] / md.norm_E));
    }

    const VerticalVector X = random_vertical(ws.rng, n);
    const VerticalVector Y = random_vertical(ws.rng, n);
    const double b = ws.connection.second_fundamental_form(unit, X, Y);
    const VerticalVector px = projector_P(md, X, ProjectorKind::P);
    const VerticalVector py = projector_P(md, Y, ProjectorKind::P);
    const double pairing = metric_G(md, px, py);
    r = std::max(r, rel(b + pairing, pairing));
    return r;
}

double check_mean_curvature(SampleWorkspace& ws) {
    const LeafFrame unit = unit_level_frame(ws);
    return std::abs(mean_curvature(ws.connection, unit) + 1.0);
}

double check_leaf_curvature_flat(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalVector X = random_vertical(ws.rng, n);
    const CurvatureReport cr = ws.connection.curvature_check(ws.frame, X);
    return std::max(cr.curvature / std::max(1.0, max_abs(X)), cr.sectional);
}

double check_totally_geodesic_span(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    const double a = uniform_in(ws.rng, 0.3, 1.5);
    const double b = uniform_in(ws.rng, 0.3, 1.5);

    // The combination a E1 + b E2 as a linear field in the fiber coordinates.
    std::vector<VerticalField::PolynomialComponent> parts(2 * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        parts[static_cast<std::size_t>(i)].linear = Eigen::VectorXd::Zero(2 * n);
        parts[static_cast<std::size_t>(i)].linear[i] = a;
        parts[static_cast<std::size_t>(n + i)].linear = Eigen::VectorXd::Zero(2 * n);
        parts[static_cast<std::size_t>(n + i)].linear[n + i] = b;
    }
    const VerticalField field = VerticalField::polynomial(std::move(parts));

    const VerticalVector direction = a * lf.e1 + b * lf.e2;
    const VerticalVector dv = ws.connection.covariant_derivative(ws.frame, direction, field);
    const VerticalVector expected = (a * a) * lf.e1 + (b * b) * lf.e2;
    const double scale = std::max(1.0, max_abs(expected));
    double r = max_abs(dv - expected) / scale;

    // Independent span certificate: the derivative resolves against {E1, E2}.
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(2 * n, 2);
    Eigen::VectorXd rhs(2 * n);
    for (int i = 0; i < n; ++i) {
        basis(i, 0) = lf.e1.comp1[i];
        basis(n + i, 1) = lf.e2.comp2[i];
        rhs[i] = dv.comp1[i];
        rhs[n + i] = dv.comp2[i];
    }
    const Eigen::VectorXd coeffs = basis.colPivHouseholderQr().solve(rhs);
    r = std::max(r, (basis * coeffs - rhs).cwiseAbs().maxCoeff() / scale);
    return r;
}

double check_eprime_non_geodesic(SampleWorkspace& ws) {
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    const double n2 = md.F2 + md.K2;

    const VerticalVector dv =
        ws.connection.covariant_derivative(ws.frame, lf.e_prime, VerticalField::euler_prime());
    const VerticalVector expected =
        (-md.F2 * md.K2) * lf.e + (md.K2 - md.F2) * lf.e_prime;
    const double scale = std::max(1.0, max_abs(expected));
    double r = max_abs(dv - expected) / scale;

    // The derivative keeps a Euler component of size F^2 K^2; its collapse
    // would make the direction geodesic, so flag that loudly.
    const double euler_coefficient = std::abs(metric_G(md, dv, lf.e)) / n2;
    if (euler_coefficient <= 1e-3) r = std::max(r, 1.0);
    return r;
}

double check_non_umbilicity(SampleWorkspace& ws) {
    const UmbilicWitnessReport w = ws.connection.non_umbilic_witness(ws.frame);
    double r = std::max(w.unit_normal, w.prime_derivative);
    if (w.block_contrast > 0.1 && w.witness <= 0.05) r = std::max(r, 1.0);

    // Re-derive a few second-form entries through the connection: pair the
    // covariant derivative of a tangent extension with the unit complement.
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    const double fkn = std::sqrt(md.F2) * std::sqrt(md.K2) * md.norm_E;
    const int m = static_cast<int>(w.frame.size());
    const int n = ws.frame.dim();
    const std::vector<std::pair<int, int>> probes = {{0, 0}, {m - 1, m - 1}, {0, m - 1}};
    for (const auto& [row, col] : probes) {
        const VerticalVector& target = w.frame[static_cast<std::size_t>(col)];
        const VerticalField first_block =
            VerticalField::constant({target.comp1, Eigen::VectorXd::Zero(n)})
                .projected(ProjectorKind::P1);
        const VerticalField second_block =
            VerticalField::constant({Eigen::VectorXd::Zero(n), target.comp2})
                .projected(ProjectorKind::P2);
        const VerticalVector dv =
            ws.connection.covariant_derivative(ws.frame, w.frame[static_cast<std::size_t>(row)],
                                               first_block) +
            ws.connection.covariant_derivative(ws.frame, w.frame[static_cast<std::size_t>(row)],
                                               second_block);
        const double through_connection = metric_G(md, dv, lf.e_prime) / fkn;
        r = std::max(r, rel(through_connection - w.second_form(row, col),
                            w.second_form(row, col)));
    }
    return r;
}

}  // namespace

std::vector<CheckSpec> leaf_checks() {
    std::vector<CheckSpec> checks;
    checks.push_back({"leaf_connection_metric", "II14", fixed_tol(1e-7),
                      check_leaf_connection_metric});
    checks.push_back({"leaf_radial_contractions", "II15", fixed_tol(1e-8),
                      check_leaf_radial_contractions});
    checks.push_back({"leaf_lemma_derivatives", "II16 II17 II18", family_tol(1e-6, 1e-9),
                      check_leaf_lemma_derivatives});
    checks.push_back(
        {"liouville_geodesic", "t2 II16", fixed_tol(1e-7), check_liouville_geodesic});
    checks.push_back(
        {"umbilical_form", "t2 II19 II20 II21", fixed_tol(1e-7), check_umbilical_form});
    checks.push_back(
        {"indicatrix_form", "t2 II22 II23", fixed_tol(1e-7), check_indicatrix_form});
    checks.push_back({"mean_curvature", "t2 II24", fixed_tol(1e-6), check_mean_curvature});
    checks.push_back({"leaf_curvature_flat", "t3 II25 cor-t3",
                      [](const RunConfig& cfg) {
                          return cfg.family == MetricFamily::euclidean ? 1e-10 : 1e-5;
                      },
                      check_leaf_curvature_flat});
    checks.push_back(
        {"totally_geodesic_span", "prop-span", fixed_tol(1e-8), check_totally_geodesic_span});
    checks.push_back(
        {"eprime_non_geodesic", "prop-eprime", fixed_tol(1e-7), check_eprime_non_geodesic});
    checks.push_back({"non_umbilicity", "thm-nonumbilic a7 a8 a9 a10", fixed_tol(1e-7),
                      check_non_umbilicity});
    return checks;
}

}  // namespace bigtan
