#include <algorithm>
#include <cmath>
#include <span>

#include <Eigen/Dense>

#include "bigtan/harness.hpp"

// Point-level checks: homogeneity consequences of the two norms, the dual
// solve, the block metric G, the Liouville forms and the projectors. Each
// body returns the worst residual of its identity group at one sample.

namespace bigtan {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

double rel(double err, double scale) { return std::abs(err) / std::max(1.0, std::abs(scale)); }

int uniform_index(SplitMix64& rng, int n) {
    const int k = static_cast<int>(rng.uniform01() * n);
    return std::min(k, n - 1);
}

std::function<double(const RunConfig&)> fixed_tol(double t) {
    return [t](const RunConfig&) { return t; };
}

std::function<double(const RunConfig&)> family_tol(double randers, double others) {
    return [randers, others](const RunConfig& cfg) {
        return cfg.family == MetricFamily::randers ? randers : others;
    };
}

// A linear chart perturbation of the identity with a determinant guard.
Eigen::MatrixXd random_chart(SplitMix64& rng, int n) {
    double scale = 0.25;
    for (int attempt = 0; attempt < 8; ++attempt) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) += scale * uniform_in(rng, -1.0, 1.0);
        if (std::abs(a.determinant()) >= 0.2) return a;
        scale *= 0.6;
    }
    return Eigen::MatrixXd::Identity(n, n);
}

double check_euler_finsler(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    double r = ws.structure.euler_identity_check(as_span(at.x), as_span(at.y)).max();
    const Eigen::VectorXd extra = random_fiber_vector(ws.rng, ws.frame.dim());
    r = std::max(r, ws.structure.euler_identity_check(as_span(at.x), as_span(extra)).max());
    return r;
}

double check_euler_cartan(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    const int n = ws.frame.dim();
    const CartanDual& dual = ws.leaf.dual();
    const CartanData d = dual.data(as_span(at.x), as_span(at.p));

    double r = rel(d.K2 - at.p.dot(d.p_upper), d.K2);
    r = std::max(r, (d.p_upper - d.g_star * at.p).cwiseAbs().maxCoeff());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double radial = 0.0;
            for (int k = 0; k < n; ++k) radial += d.cartan(i, j, k) * at.p[k];
            r = std::max(r, std::abs(radial));
        }
    }
    for (const double lambda : {0.5, 2.0}) {
        const Eigen::VectorXd scaled = lambda * at.p;
        const double k2 = dual.k2(as_span(at.x), as_span(scaled));
        r = std::max(r, rel(k2 - lambda * lambda * d.K2, d.K2));
    }
    return r;
}

double check_metric_positive_definite(SampleWorkspace& ws) {
    const VerticalMetricData md = ws.frame.metric_data();
    double r = (md.g - md.g.transpose()).cwiseAbs().maxCoeff();
    r = std::max(r, (md.g_star - md.g_star.transpose()).cwiseAbs().maxCoeff());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(md.g);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> egs(md.g_star);
    if (eg.eigenvalues().minCoeff() <= 0.0 || egs.eigenvalues().minCoeff() <= 0.0)
        r = std::max(r, 1.0);
    return r;
}

double check_legendre_roundtrip(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    const CartanDual& dual = ws.leaf.dual();

    const Eigen::VectorXd y0 = random_fiber_vector(ws.rng, ws.frame.dim());
    const Eigen::VectorXd p0 = legendre_forward(ws.structure, as_span(at.x), as_span(y0));
    const LegendreSolution forward_back = dual.invert(as_span(at.x), as_span(p0));
    double r = (forward_back.y_of_p - y0).cwiseAbs().maxCoeff() /
               std::max(1.0, y0.cwiseAbs().maxCoeff());

    const LegendreSolution back = dual.invert(as_span(at.x), as_span(at.p));
    const Eigen::VectorXd p_again =
        legendre_forward(ws.structure, as_span(at.x), as_span(back.y_of_p));
    r = std::max(r, (p_again - at.p).cwiseAbs().maxCoeff() /
                        std::max(1.0, at.p.cwiseAbs().maxCoeff()));
    return r;
}

double check_legendre_dual_metric(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    const CartanData cd = ws.leaf.dual().data(as_span(at.x), as_span(at.p));
    const FundamentalData fd =
        ws.structure.fundamental_data(as_span(at.x), as_span(cd.solve.y_of_p));
    double r = (cd.g_star - fd.g_inv).cwiseAbs().maxCoeff() /
               std::max(1.0, fd.g_inv.cwiseAbs().maxCoeff());
    r = std::max(r, rel(cd.K2 - fd.F2, fd.F2));
    return r;
}

double check_legendre_jet_consistency(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    const int n = ws.frame.dim();
    const Jet& k2 = ws.frame.k2();

    double r = ws.frame.dual_jet_residual();

    double radial = 0.0;
    for (int i = 0; i < n; ++i) radial += at.p[i] * k2.derivative(n + i).value();
    r = std::max(r, rel(radial - 2.0 * k2.value(), k2.value()));

    const LegendreSolution sol = ws.leaf.dual().invert(as_span(at.x), as_span(at.p));
    for (int i = 0; i < n; ++i) {
        const double grad_half = 0.5 * k2.derivative(n + i).value();
        r = std::max(r, rel(grad_half - sol.y_of_p[i], sol.y_of_p[i]));
    }
    return r;
}

double check_coordinate_equivariance(SampleWorkspace& ws) {
    const BigTangentPoint& at = ws.frame.point();
    const int n = ws.frame.dim();

    const Eigen::MatrixXd a = random_chart(ws.rng, n);
    const Eigen::MatrixXd a_inv = a.inverse();
    const FinslerStructure moved = ws.structure.with_linear_chart(a);
    const CartanDual moved_dual(moved, ws.config.solver);

    BigTangentPoint to;
    to.x = a * at.x;
    to.y = a * at.y;
    to.p = a_inv.transpose() * at.p;

    const VerticalMetricData md = ws.frame.metric_data();
    double r = rel(moved.f2(as_span(to.x), as_span(to.y)) - md.F2, md.F2);
    r = std::max(r, rel(moved_dual.k2(as_span(to.x), as_span(to.p)) - md.K2, md.K2));

    const VerticalMetricData md_t = VerticalMetricData::at(moved, moved_dual, to);
    const VerticalVector X = random_vertical(ws.rng, n);
    const VerticalVector Y = random_vertical(ws.rng, n);
    const VerticalVector Xt{a * X.comp1, a_inv.transpose() * X.comp2};
    const VerticalVector Yt{a * Y.comp1, a_inv.transpose() * Y.comp2};

    const double g_before = metric_G(md, X, Y);
    r = std::max(r, rel(metric_G(md_t, Xt, Yt) - g_before, g_before));

    const LiouvilleForms before = liouville_forms(md, X);
    const LiouvilleForms after = liouville_forms(md_t, Xt);
    r = std::max(r, std::abs(after.zeta - before.zeta));
    r = std::max(r, std::abs(after.zeta1 - before.zeta1));
    r = std::max(r, std::abs(after.zeta2 - before.zeta2));
    return r;
}

double check_liouville_metric_blocks(SampleWorkspace& ws) {
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);

    double r = rel(metric_G(md, lf.e1, lf.e1) - md.F2, md.F2);
    r = std::max(r, rel(metric_G(md, lf.e2, lf.e2) - md.K2, md.K2));
    const double n2 = md.F2 + md.K2;
    r = std::max(r, rel(metric_G(md, lf.e, lf.e) - n2, n2));
    r = std::max(r, std::abs(metric_G(md, lf.e1, lf.e2)));
    r = std::max(r, rel(metric_G(md, lf.e_prime, lf.e), n2 * n2));
    r = std::max(r, (md.y_lower - md.g * md.point.y).cwiseAbs().maxCoeff());
    r = std::max(r, (md.p_upper - md.g_star * md.point.p).cwiseAbs().maxCoeff());
    return r;
}

double check_liouville_forms(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    const VerticalVector X = random_vertical(ws.rng, n);
    const LiouvilleForms f = liouville_forms(md, X);
    const double F = std::sqrt(md.F2);
    const double K = std::sqrt(md.K2);

    double r = std::abs(f.zeta - metric_G(md, X, lf.e) / md.norm_E);
    const VerticalVector X1only{X.comp1, Eigen::VectorXd::Zero(n)};
    const VerticalVector X2only{Eigen::VectorXd::Zero(n), X.comp2};
    r = std::max(r, std::abs(f.zeta1 - metric_G(md, X1only, lf.e1) / F));
    r = std::max(r, std::abs(f.zeta2 - metric_G(md, X2only, lf.e2) / K));

    const Eigen::VectorXd zl = zeta_lower(md);
    const Eigen::VectorXd zu = zeta_upper(md);
    r = std::max(r, std::abs(f.zeta - (zl.dot(X.comp1) + zu.dot(X.comp2))));
    r = std::max(r, std::abs(f.zeta1 - zeta1_components(md).dot(X.comp1)));
    r = std::max(r, std::abs(f.zeta2 - zeta2_components(md).dot(X.comp2)));
    r = std::max(r, (zl - md.y_lower / md.norm_E).cwiseAbs().maxCoeff());
    r = std::max(r, (zu - md.p_upper / md.norm_E).cwiseAbs().maxCoeff());

    r = std::max(r, rel(liouville_forms(md, lf.e).zeta - md.norm_E, md.norm_E));
    return r;
}

double check_projector_algebra(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();
    const VerticalVector X = random_vertical(ws.rng, n);
    const VerticalVector Y = random_vertical(ws.rng, n);
    return decomposition_checks(md, X, Y).max();
}

double check_projector_components(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();
    const Eigen::VectorXd& y = md.point.y;
    const Eigen::VectorXd& p = md.point.p;
    const double n2 = md.F2 + md.K2;

    double r = 0.0;
    for (int j = 0; j < n; ++j) {
        VerticalVector ey = VerticalVector::zero(n);
        ey.comp1[j] = 1.0;
        const VerticalVector full_y = projector_P(md, ey, ProjectorKind::P);
        const VerticalVector block_y = projector_P(md, ey, ProjectorKind::P1);
        VerticalVector ep = VerticalVector::zero(n);
        ep.comp2[j] = 1.0;
        const VerticalVector full_p = projector_P(md, ep, ProjectorKind::P);
        const VerticalVector block_p = projector_P(md, ep, ProjectorKind::P2);
        for (int i = 0; i < n; ++i) {
            const double delta = i == j ? 1.0 : 0.0;
            r = std::max(r, std::abs(full_y.comp1[i] - (delta - md.y_lower[j] * y[i] / n2)));
            r = std::max(r, std::abs(full_y.comp2[i] - (-md.y_lower[j] * p[i] / n2)));
            r = std::max(r, std::abs(full_p.comp1[i] - (-md.p_upper[j] * y[i] / n2)));
            r = std::max(r, std::abs(full_p.comp2[i] - (delta - md.p_upper[j] * p[i] / n2)));
            r = std::max(r, std::abs(block_y.comp1[i] - (delta - md.y_lower[j] * y[i] / md.F2)));
            r = std::max(r, std::abs(block_y.comp2[i]));
            r = std::max(r, std::abs(block_p.comp2[i] - (delta - md.p_upper[j] * p[i] / md.K2)));
            r = std::max(r, std::abs(block_p.comp1[i]));
        }
    }
    return r;
}

double check_remark_relations(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    const VerticalVector X = random_vertical(ws.rng, n);
    const LiouvilleForms f = liouville_forms(md, X);
    const double F = std::sqrt(md.F2);
    const double K = std::sqrt(md.K2);
    const double n2 = md.F2 + md.K2;

    double r = std::abs(f.zeta - (F * f.zeta1 + K * f.zeta2) / md.norm_E);

    const VerticalVector full = projector_P(md, X, ProjectorKind::P);
    const VerticalVector part1 = projector_P(md, X, ProjectorKind::P1);
    const VerticalVector part2 = projector_P(md, X, ProjectorKind::P2);
    const double correction = (f.zeta1 / F - f.zeta2 / K) / n2;
    const VerticalVector rebuilt = part1 + part2 + correction * lf.e_prime;
    r = std::max(r, max_abs(full - rebuilt));
    return r;
}

double check_vertical_decomposition(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const SubfoliationReport sub = ws.connection.subfoliation_check(ws.frame);

    double r = std::max({sub.euler_membership, sub.prime_membership, sub.split_membership});
    const bool ranks_ok = sub.rank_euler_pair == 2 && sub.rank_split == 2 * n - 2 &&
                          sub.rank_kernel == 2 * n - 1;
    if (!ranks_ok) r = std::max(r, 1.0);

    const VerticalMetricData md = ws.frame.metric_data();
    const VerticalVector X = random_vertical(ws.rng, n);
    const VerticalVector X1only{X.comp1, Eigen::VectorXd::Zero(n)};
    const VerticalVector X2only{Eigen::VectorXd::Zero(n), X.comp2};
    r = std::max(r, std::abs(metric_G(md, X1only, X2only)));
    return r;
}

double check_integrability_brackets(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const int i = uniform_index(ws.rng, n);
    const int j = uniform_index(ws.rng, n);

    double r = 0.0;
    for (const FramePairKind kind : {FramePairKind::yy, FramePairKind::yp, FramePairKind::pp}) {
        r = std::max(r, ws.connection.integrability_check(ws.frame, i, j, kind).max());
    }

    const VerticalMetricData md = ws.frame.metric_data();
    const VerticalVector X = random_vertical(ws.rng, n);
    const VerticalVector w = projector_P(md, X, ProjectorKind::P);
    const double membership = md.y_lower.dot(w.comp1) + md.p_upper.dot(w.comp2);
    r = std::max(r, std::abs(membership) / std::max(1.0, max_abs(X)));
    return r;
}

double check_integrability_derivatives(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const LeafFrame& f = ws.frame;
    const Eigen::VectorXd& y = f.point().y;
    const Eigen::VectorXd& p = f.point().p;

    std::vector<VerticalField::PolynomialComponent> parts(2 * n);
    for (int c = 0; c < 2 * n; ++c) {
        parts[c].constant = uniform_in(ws.rng, -1.0, 1.0);
        parts[c].linear.resize(2 * n);
        for (int k = 0; k < 2 * n; ++k) parts[c].linear[k] = uniform_in(ws.rng, -0.5, 0.5);
    }
    const VerticalField tangent =
        VerticalField::polynomial(std::move(parts)).projected(ProjectorKind::P);
    const std::vector<Jet> comps = tangent.components(f);

    double scale = 1.0;
    for (const Jet& c : comps) scale = std::max(scale, std::abs(c.value()));

    double r = 0.0;
    for (int k = 0; k < n; ++k) {
        // Derivative of the tangency pairing along d/dy^k, with and without
        // the metric-derivative term (the latter uses its radial vanishing).
        double with_metric = 0.0;
        double simplified = 0.0;
        for (int i = 0; i < n; ++i) {
            simplified += f.g(i, k).value() * comps[static_cast<std::size_t>(i)].value();
            for (int j = 0; j < n; ++j) {
                with_metric += f.g(i, j).derivative(k).value() *
                               comps[static_cast<std::size_t>(i)].value() * y[j];
                simplified += f.g(i, j).value() *
                              comps[static_cast<std::size_t>(i)].derivative(k).value() * y[j];
                simplified += f.g_star(i, j).value() *
                              comps[static_cast<std::size_t>(n + i)].derivative(k).value() * p[j];
            }
        }
        with_metric += simplified;
        r = std::max(r, std::abs(with_metric));
        r = std::max(r, std::abs(simplified));

        // Same pairing differentiated along d/dp_k.
        double with_metric_p = 0.0;
        double simplified_p = 0.0;
        for (int i = 0; i < n; ++i) {
            simplified_p += f.g_star(i, k).value() * comps[static_cast<std::size_t>(n + i)].value();
            for (int j = 0; j < n; ++j) {
                with_metric_p += f.g_star(i, j).derivative(n + k).value() *
                                 comps[static_cast<std::size_t>(n + i)].value() * p[j];
                simplified_p += f.g(i, j).value() *
                                comps[static_cast<std::size_t>(i)].derivative(n + k).value() *
                                y[j];
                simplified_p += f.g_star(i, j).value() *
                                comps[static_cast<std::size_t>(n + i)].derivative(n + k).value() *
                                p[j];
            }
        }
        with_metric_p += simplified_p;
        r = std::max(r, std::abs(with_metric_p));
        r = std::max(r, std::abs(simplified_p));
    }
    return r / scale;
}

double check_radial_homogeneity(SampleWorkspace& ws) {
    const int n = ws.frame.dim();
    const VerticalMetricData md = ws.frame.metric_data();

    double r = 0.0;
    for (int k = 0; k < 2 * n; ++k) {
        VerticalVector basis = VerticalVector::zero(n);
        if (k < n) {
            basis.comp1[k] = 1.0;
        } else {
            basis.comp2[k - n] = 1.0;
        }
        const VerticalVector w = projector_P(md, basis, ProjectorKind::P);
        r = std::max(r, std::abs(ws.frame.direct(w, ws.frame.norm())));
    }

    const VerticalVector radial{md.point.y, md.point.p};
    r = std::max(r, rel(ws.frame.direct(radial, ws.frame.norm()) - md.norm_E, md.norm_E));
    return r;
}

}  // namespace

std::vector<CheckSpec> algebra_checks() {
    std::vector<CheckSpec> checks;
    checks.push_back({"euler_finsler", "I6", family_tol(1e-8, 1e-10), check_euler_finsler});
    checks.push_back({"euler_cartan", "I7", family_tol(1e-8, 1e-10), check_euler_cartan});
    checks.push_back({"metric_positive_definite", "I8", fixed_tol(1e-10),
                      check_metric_positive_definite});
    checks.push_back({"legendre_roundtrip", "I7", fixed_tol(1e-9), check_legendre_roundtrip});
    checks.push_back(
        {"legendre_dual_metric", "I7 I8", fixed_tol(1e-7), check_legendre_dual_metric});
    checks.push_back(
        {"legendre_jet_consistency", "I7", fixed_tol(1e-8), check_legendre_jet_consistency});
    checks.push_back(
        {"coordinate_equivariance", "I1", fixed_tol(1e-9), check_coordinate_equivariance});
    checks.push_back({"liouville_metric_blocks", "I5 xII1 yII1 II1", fixed_tol(1e-9),
                      check_liouville_metric_blocks});
    checks.push_back({"liouville_forms", "xII2 yII2 II2 II6 II7", fixed_tol(1e-10),
                      check_liouville_forms});
    checks.push_back({"projector_algebra", "II3 II4 II5 xII3 xII4 xII5 yII3 yII4 yII5",
                      fixed_tol(1e-10), check_projector_algebra});
    checks.push_back({"projector_components", "II6 II8 xII6 yII6", fixed_tol(1e-10),
                      check_projector_components});
    checks.push_back({"remark_relations", "a1 a2", fixed_tol(1e-10), check_remark_relations});
    checks.push_back({"vertical_decomposition", "I4 a3 a4 a5", fixed_tol(1e-9),
                      check_vertical_decomposition});
    checks.push_back({"integrability_brackets", "thm-integrability II9", fixed_tol(1e-7),
                      check_integrability_brackets});
    checks.push_back({"integrability_derivatives", "II10 II11 II12 II13", fixed_tol(1e-7),
                      check_integrability_derivatives});
    checks.push_back(
        {"radial_homogeneity", "r1", fixed_tol(1e-9), check_radial_homogeneity});
    return checks;
}

}  // namespace bigtan
