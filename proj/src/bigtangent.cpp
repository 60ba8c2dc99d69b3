#include "bigtan/bigtangent.hpp"

#include <algorithm>
#include <cmath>

namespace bigtan {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

void require_same_point_size(const VerticalMetricData& m, const VerticalVector& v,
                             const char* who) {
    if (v.comp1.size() != m.point.dim() || v.comp2.size() != m.point.dim()) {
        throw ArgumentError(std::string(who) + ": vector dimension does not match the point");
    }
}

}  // namespace

VerticalVector operator+(const VerticalVector& a, const VerticalVector& b) {
    return {a.comp1 + b.comp1, a.comp2 + b.comp2};
}

VerticalVector operator-(const VerticalVector& a, const VerticalVector& b) {
    return {a.comp1 - b.comp1, a.comp2 - b.comp2};
}

VerticalVector operator*(double s, const VerticalVector& a) {
    return {s * a.comp1, s * a.comp2};
}

double max_abs(const VerticalVector& a) {
    return std::max(a.comp1.cwiseAbs().maxCoeff(), a.comp2.cwiseAbs().maxCoeff());
}

VerticalMetricData VerticalMetricData::at(const FinslerStructure& s, const CartanDual& d,
                                          BigTangentPoint point) {
    const int n = point.dim();
    if (point.y.size() != n || point.p.size() != n || s.dim() != n || d.dim() != n) {
        throw ArgumentError("VerticalMetricData: point and structure dimensions disagree");
    }

    VerticalMetricData m;
    const auto primal = s.fundamental_data(as_span(point.x), as_span(point.y));
    const auto dual = d.data(as_span(point.x), as_span(point.p));

    m.g = primal.g;
    m.g_star = dual.g_star;
    m.F2 = primal.F2;
    m.K2 = dual.K2;
    m.norm_E = std::sqrt(m.F2 + m.K2);
    m.y_lower = primal.y_lower;
    m.p_upper = m.g_star * point.p;
    m.point = std::move(point);
    return m;
}

double metric_G(const VerticalMetricData& m, const VerticalVector& X, const VerticalVector& Y) {
    require_same_point_size(m, X, "metric_G");
    require_same_point_size(m, Y, "metric_G");
    return X.comp1.dot(m.g * Y.comp1) + X.comp2.dot(m.g_star * Y.comp2);
}

LiouvilleFields liouville_fields(const VerticalMetricData& m) {
    const int n = m.point.dim();
    LiouvilleFields out{{m.point.y, Eigen::VectorXd::Zero(n)},
                        {Eigen::VectorXd::Zero(n), m.point.p},
                        VerticalVector{},
                        VerticalVector{}};
    out.e = out.e1 + out.e2;
    out.e_prime = m.K2 * out.e1 - m.F2 * out.e2;
    return out;
}

LiouvilleForms liouville_forms(const VerticalMetricData& m, const VerticalVector& X) {
    require_same_point_size(m, X, "liouville_forms");
    const double along1 = m.y_lower.dot(X.comp1);
    const double along2 = m.p_upper.dot(X.comp2);
    return {along1 / std::sqrt(m.F2), along2 / std::sqrt(m.K2), (along1 + along2) / m.norm_E};
}

Eigen::VectorXd zeta_lower(const VerticalMetricData& m) { return m.y_lower / m.norm_E; }

Eigen::VectorXd zeta_upper(const VerticalMetricData& m) { return m.p_upper / m.norm_E; }

Eigen::VectorXd zeta1_components(const VerticalMetricData& m) {
    return m.y_lower / std::sqrt(m.F2);
}

Eigen::VectorXd zeta2_components(const VerticalMetricData& m) {
    return m.p_upper / std::sqrt(m.K2);
}

VerticalVector projector_P(const VerticalMetricData& m, const VerticalVector& X,
                           ProjectorKind which) {
    require_same_point_size(m, X, "projector_P");
    const int n = m.point.dim();
    switch (which) {
        case ProjectorKind::P1: {
            const double along = m.y_lower.dot(X.comp1);
            return {X.comp1 - (along / m.F2) * m.point.y, Eigen::VectorXd::Zero(n)};
        }
        case ProjectorKind::P2: {
            const double along = m.p_upper.dot(X.comp2);
            return {Eigen::VectorXd::Zero(n), X.comp2 - (along / m.K2) * m.point.p};
        }
        default: {
            const double along = m.y_lower.dot(X.comp1) + m.p_upper.dot(X.comp2);
            const double scale = along / (m.norm_E * m.norm_E);
            return {X.comp1 - scale * m.point.y, X.comp2 - scale * m.point.p};
        }
    }
}

double DecompositionReport::max() const {
    return std::max({pairing, sub_pairing, idempotent, self_adjoint, form_annihilation,
                     reconstruction, split, span_exchange, membership, kernel_line});
}

DecompositionReport decomposition_checks(const VerticalMetricData& m, const VerticalVector& X,
                                         const VerticalVector& Y) {
    require_same_point_size(m, X, "decomposition_checks");
    require_same_point_size(m, Y, "decomposition_checks");
    const int n = m.point.dim();
    const double f = std::sqrt(m.F2);
    const double k = std::sqrt(m.K2);

    const LiouvilleFields fields = liouville_fields(m);
    const VerticalVector px = projector_P(m, X, ProjectorKind::P);
    const VerticalVector py = projector_P(m, Y, ProjectorKind::P);
    const LiouvilleForms fx = liouville_forms(m, X);
    const LiouvilleForms fy = liouville_forms(m, Y);

    DecompositionReport r{};

    // Pairing after projection drops exactly the rank-one zeta term.
    const double base = metric_G(m, X, Y) - fx.zeta * fy.zeta;
    r.pairing = std::max(std::abs(metric_G(m, X, py) - base),
                         std::abs(metric_G(m, px, py) - base));

    // Single-block versions of the same statement.
    const VerticalVector x1{X.comp1, Eigen::VectorXd::Zero(n)};
    const VerticalVector y1{Y.comp1, Eigen::VectorXd::Zero(n)};
    const VerticalVector x2{Eigen::VectorXd::Zero(n), X.comp2};
    const VerticalVector y2{Eigen::VectorXd::Zero(n), Y.comp2};
    const VerticalVector p1x = projector_P(m, X, ProjectorKind::P1);
    const VerticalVector p2x = projector_P(m, X, ProjectorKind::P2);
    r.sub_pairing = std::max(
        std::abs(metric_G(m, x1, projector_P(m, y1, ProjectorKind::P1)) -
                 (metric_G(m, x1, y1) - fx.zeta1 * fy.zeta1)),
        std::abs(metric_G(m, x2, projector_P(m, y2, ProjectorKind::P2)) -
                 (metric_G(m, x2, y2) - fx.zeta2 * fy.zeta2)));

    r.idempotent = max_abs(projector_P(m, px, ProjectorKind::P) - px);
    r.self_adjoint = std::abs(metric_G(m, px, Y) - metric_G(m, X, py));
    r.form_annihilation =
        std::max({std::abs(liouville_forms(m, px).zeta), std::abs(liouville_forms(m, p1x).zeta1),
                  std::abs(liouville_forms(m, p2x).zeta2)});
    r.reconstruction = max_abs(X - px - (fx.zeta / m.norm_E) * fields.e);
    r.split = max_abs(X - p1x - p2x - (fx.zeta1 / f) * fields.e1 - (fx.zeta2 / k) * fields.e2);

    // e1 and e2 must come back out of the pair {e, e_prime}:
    //   e1 = (F^2 e + e_prime) / (F^2 + K^2),  e2 = (K^2 e - e_prime) / (F^2 + K^2).
    const double n2 = m.F2 + m.K2;
    r.span_exchange =
        std::max(max_abs((1.0 / n2) * (m.F2 * fields.e + fields.e_prime) - fields.e1),
                 max_abs((1.0 / n2) * (m.K2 * fields.e - fields.e_prime) - fields.e2));

    // Projected vectors pair to zero against the Euler directions.
    r.membership = std::abs(m.y_lower.dot(px.comp1) + m.p_upper.dot(px.comp2));

    // The kernel of P is exactly the Euler line.
    r.kernel_line = max_abs(projector_P(m, (fx.zeta / m.norm_E) * fields.e, ProjectorKind::P));

    return r;
}

}  // namespace bigtan
