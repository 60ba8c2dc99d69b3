#pragma once

#include <Eigen/Dense>

#include "bigtan/finsler.hpp"
#include "bigtan/legendre.hpp"

namespace bigtan {

// A point of the doubled fiber bundle: base coordinates together with one
// tangent and one cotangent fiber vector, both off their zero sections.
struct BigTangentPoint {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd p;

    int dim() const { return static_cast<int>(x.size()); }
};

// A vertical vector at such a point: comp1 holds the d/dy components,
// comp2 the d/dp components (one index down, matching the fiber covector).
struct VerticalVector {
    Eigen::VectorXd comp1;
    Eigen::VectorXd comp2;

    static VerticalVector zero(int n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
    }
    int dim() const { return static_cast<int>(comp1.size()); }
};

VerticalVector operator+(const VerticalVector& a, const VerticalVector& b);
VerticalVector operator-(const VerticalVector& a, const VerticalVector& b);
VerticalVector operator*(double s, const VerticalVector& a);
double max_abs(const VerticalVector& a);

// Frozen metric data of the vertical bundle at one point: the fundamental
// tensor of F at (x, y), the dual tensor of K at (x, p), the two squared
// norms and the length of the full Euler vector. y_lower and p_upper are
// the index-shifted fiber vectors the component formulas keep reusing.
struct VerticalMetricData {
    BigTangentPoint point;
    Eigen::MatrixXd g;        // g_ij(x, y)
    Eigen::MatrixXd g_star;   // g*^{ij}(x, p)
    double F2 = 0.0;
    double K2 = 0.0;
    double norm_E = 0.0;      // sqrt(F2 + K2)
    Eigen::VectorXd y_lower;  // y_i = g_ij y^j
    Eigen::VectorXd p_upper;  // p^i = g*^{ij} p_j

    static VerticalMetricData at(const FinslerStructure& s, const CartanDual& d,
                                 BigTangentPoint point);
};

// Block-diagonal pairing: g on the comp1 slots plus g* on the comp2 slots.
double metric_G(const VerticalMetricData& m, const VerticalVector& X, const VerticalVector& Y);

// The two Euler vectors, their sum, and the complementary combination
// e_prime = K^2 e1 - F^2 e2 that is G-orthogonal to the sum.
struct LiouvilleFields {
    VerticalVector e1;       // (y, 0)
    VerticalVector e2;       // (0, p)
    VerticalVector e;        // e1 + e2
    VerticalVector e_prime;  // K^2 e1 - F^2 e2
};

LiouvilleFields liouville_fields(const VerticalMetricData& m);

// Values of the three unit covectors along the Euler directions:
//   zeta1(X) = G(X1, e1)/F,  zeta2(X) = G(X2, e2)/K,  zeta(X) = G(X, e)/|e|.
struct LiouvilleForms {
    double zeta1;
    double zeta2;
    double zeta;
};

LiouvilleForms liouville_forms(const VerticalMetricData& m, const VerticalVector& X);

// Component vectors of the forms: zeta(X) = zeta_lower_i X1^i + zeta_upper^i X2_i.
Eigen::VectorXd zeta_lower(const VerticalMetricData& m);        // y_i / |e|
Eigen::VectorXd zeta_upper(const VerticalMetricData& m);        // p^i / |e|
Eigen::VectorXd zeta1_components(const VerticalMetricData& m);  // y_i / F
Eigen::VectorXd zeta2_components(const VerticalMetricData& m);  // p^i / K

enum class ProjectorKind { P1, P2, P };

// G-orthogonal projection along the Euler directions. P removes the span
// of the full Euler vector: PX = X - zeta(X) e / |e|, realized blockwise as
//   (PX)1^i = X1^i - (y_j X1^j + p^j X2_j) y^i / |e|^2
//   (PX)2_i = X2_i - (y_j X1^j + p^j X2_j) p_i / |e|^2.
// P1 and P2 are the analogous projections inside a single fiber block;
// their output lives entirely in that block.
VerticalVector projector_P(const VerticalMetricData& m, const VerticalVector& X,
                           ProjectorKind which);

// Residuals of the algebraic identities tying G, the forms and the
// projectors together, evaluated on concrete vectors X, Y.
struct DecompositionReport {
    double pairing;            // G(X,PY) and G(PX,PY) against G(X,Y) - zeta(X)zeta(Y)
    double sub_pairing;        // the same statement for the single-block projectors
    double idempotent;         // components of P(PX) - PX
    double self_adjoint;       // G(PX,Y) - G(X,PY)
    double form_annihilation;  // zeta(PX), zeta1(P1 X), zeta2(P2 X)
    double reconstruction;     // X - PX - zeta(X) e / |e|
    double split;              // X - P1 X - P2 X - zeta1 e1/F - zeta2 e2/K
    double span_exchange;      // e1, e2 rebuilt out of {e, e_prime}
    double membership;         // the pairing y_i (PX)1^i + p^i (PX)2_i
    double kernel_line;        // P applied to the zeta(X)-sized Euler direction
    double max() const;
};

DecompositionReport decomposition_checks(const VerticalMetricData& m, const VerticalVector& X,
                                         const VerticalVector& Y);

}  // namespace bigtan
