#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

#include "bigtan/bigtangent.hpp"

namespace bigtan {

class LeafFrame;

// Restriction of the doubled bundle to one base point: x is frozen at the
// stored coordinates and everything varies in (y, p) only. The leaf carries
// the product metric (g on the y block, g* on the p block) whose geometry
// the connection below works out; its dimension is 2n.
class Leaf {
  public:
    Leaf(FinslerStructure structure, Eigen::VectorXd base, NewtonSettings solver = {});

    const Eigen::VectorXd& base() const { return base_; }
    const FinslerStructure& structure() const { return dual_.base(); }
    const CartanDual& dual() const { return dual_; }
    int dim() const { return dual_.dim(); }
    int leaf_dim() const { return 2 * dual_.dim(); }

    // A point of the leaf; x is filled in from the frozen base.
    BigTangentPoint point(Eigen::VectorXd y, Eigen::VectorXd p) const;
    bool contains(const BigTangentPoint& at) const;

    // Order-4 expansion of the leaf data around (at.y, at.p); throws
    // ArgumentError when at.x differs from the frozen base.
    LeafFrame frame(const BigTangentPoint& at) const;

  private:
    Eigen::VectorXd base_;
    CartanDual dual_;
};

// Everything the leaf geometry needs at one point, expanded as jets in the
// 2n fiber coordinates: variables 0..n-1 displace y, variables n..2n-1
// displace p. Scalar data sits at order 4, the block metrics at order 2 and
// the connection coefficients at order 1, which is exactly deep enough for
// second covariant derivatives and curvature.
class LeafFrame {
  public:
    LeafFrame(const Leaf& leaf, BigTangentPoint at);

    const BigTangentPoint& point() const { return point_; }
    const JetContext& ctx() const { return ctx_; }
    int dim() const { return n_; }

    // Affine seed of fiber coordinate k (k in 0..2n-1).
    const Jet& coordinate(int k) const;

    const Jet& f2() const { return f2_; }
    const Jet& k2() const { return dual_.k2; }
    // sqrt(F^2 + K^2), the length of the full Euler vector.
    const Jet& norm() const { return norm_; }

    const Jet& y_lower(int i) const;   // 1/2 d(F^2)/dy^i, order 3
    const Jet& p_upper(int i) const;   // 1/2 d(K^2)/dp_i, order 3
    const Jet& g(int i, int j) const;  // 1/2 d^2(F^2)/dy^i dy^j, order 2
    const Jet& g_star(int i, int j) const;
    const Jet& g_inv(int i, int j) const;
    const Jet& g_star_inv(int i, int j) const;

    // Levi-Civita coefficients of the product metric, one block at a time:
    // christoffel_y(i,j,k) is the d/dy^k component of the derivative of
    // d/dy^j along d/dy^i, equal to (1/2) g^{lk} dg_{jl}/dy^i because the
    // fiber derivative of the block metric is totally symmetric. The p
    // block mirrors it with the dual tensor: (1/2) g*_{lk} dg*^{jl}/dp_i.
    // Mixed blocks vanish identically, so they are not stored.
    const Jet& christoffel_y(int i, int j, int k) const;
    const Jet& christoffel_p(int i, int j, int k) const;

    // Convergence defect of the jet-level dual solve underneath k2().
    double dual_jet_residual() const { return dual_.jet_residual; }

    // Value-level snapshot for the pointwise vertical-algebra helpers.
    VerticalMetricData metric_data() const;

    // Directional derivative of a scalar jet along component jets (2n of
    // them) or along a pointwise vector; one order lower, resp. a value.
    Jet directional(std::span<const Jet> components, const Jet& f) const;
    double direct(const VerticalVector& X, const Jet& f) const;

    // G(Y, E) as a jet: y_i Y1^i + p^i Y2_i. The unit form is this over norm().
    Jet euler_pairing(std::span<const Jet> components) const;
    Jet form_zeta(std::span<const Jet> components) const;

  private:
    int n_;
    BigTangentPoint point_;
    JetContext ctx_;
    Jet f2_;
    DualJetResult dual_;
    Jet norm_;
    std::vector<Jet> coords_;
    std::vector<Jet> y_lower_, p_upper_;
    std::vector<Jet> g_, g_star_, g_inv_, g_star_inv_;
    std::vector<Jet> cy_, cp_;
};

// A section of the vertical bundle over one leaf, given by its 2n component
// functions in jet form (first the d/dy components, then the d/dp ones).
// Built-in constructors cover the fields the identities quantify over;
// `projected` post-composes with one of the pointwise projectors so that
// constant-component fields become tangent to the distribution under study.
class VerticalField {
  public:
    using Builder = std::function<std::vector<Jet>(const LeafFrame&)>;

    explicit VerticalField(Builder builder);

    std::vector<Jet> components(const LeafFrame& frame) const;
    VerticalVector value(const LeafFrame& frame) const;

    static VerticalField constant(VerticalVector v);
    static VerticalField coordinate(int index);  // d/dy^i for index < n, else d/dp_{index-n}
    static VerticalField euler1();               // (y, 0)
    static VerticalField euler2();               // (0, p)
    static VerticalField euler();                // (y, p)
    static VerticalField euler_prime();          // K^2 euler1 - F^2 euler2
    static VerticalField unit_euler();           // euler over sqrt(F^2 + K^2)

    // Component-wise polynomial of degree <= 2 in the 2n fiber coordinates;
    // one entry per component, missing blocks read as zero.
    struct PolynomialComponent {
        double constant = 0.0;
        Eigen::VectorXd linear;     // length 2n or empty
        Eigen::MatrixXd quadratic;  // 2n x 2n or empty, used symmetrized
    };
    static VerticalField polynomial(std::vector<PolynomialComponent> components);

    VerticalField projected(ProjectorKind kind) const;

  private:
    Builder builder_;
};

// Residuals of the defining properties of the leaf connection: the radial
// contractions of both coefficient blocks, compatibility with the block
// metrics (derivative of the metric against both coefficient contractions)
// and the symmetry of the lower index pair.
struct LeviCivitaReport {
    double radial_contraction_y = 0.0;
    double radial_contraction_p = 0.0;
    double compatibility_y = 0.0;
    double compatibility_p = 0.0;
    double torsion_y = 0.0;
    double torsion_p = 0.0;
    double max() const;
};

// Residuals of the three covariant-derivative identities: the normalized
// Euler field differentiates to its projector image over the norm, the unit
// form differentiates to the projected pairing over the norm, and the
// projector differentiates to a rank-one correction along the Euler field.
struct LemmaReport {
    double unit_euler = 0.0;
    double zeta = 0.0;
    double projector = 0.0;
    double max() const;
};

// Curvature data of the plane spanned by a probe vector and the Euler
// field, plus the two radial facts feeding the cancellation: the Euler
// field reproduces the norm and the projected frame annihilates it.
struct CurvatureReport {
    double curvature = 0.0;          // |R(X, E)E| componentwise
    double sectional = 0.0;          // sectional curvature of {X, E}, 0 when degenerate
    double norm_homogeneity = 0.0;   // |E(norm) - norm|
    double frame_annihilation = 0.0; // max over the projected frame of |(P e_k)(norm)|
    double max() const;
};

// Bracket residuals of the tangent distributions: the kernel-of-zeta frame
// closes under brackets (measured against the unit form and against the
// Euler pairing), a random pair of projected polynomial fields does too,
// and the two split-block constructions commute outright.
struct IntegrabilityReport {
    double zeta_pairing = 0.0;
    double euler_pairing = 0.0;
    double random_pairing = 0.0;
    double split_bracket = 0.0;
    double euler_bracket = 0.0;
    double max() const;
};

enum class FramePairKind { yy, yp, pp };

// Rank and membership certificates for the nested vertical distributions:
// span{E1, E2} has rank 2 and contains both E and E'; the split projected
// frames span 2n-2 directions inside the kernel of zeta; the full projected
// frame spans that kernel (rank 2n-1).
struct SubfoliationReport {
    int rank_euler_pair = 0;
    int rank_split = 0;
    int rank_kernel = 0;
    double euler_membership = 0.0;
    double prime_membership = 0.0;
    double split_membership = 0.0;
};

// Shape report of the split vertical distribution inside the kernel leaf:
// the normalized complement direction E'/(F K norm) is unit, its covariant
// derivative along split directions is the block contrast K^2 P1 - F^2 P2,
// and the resulting second form stays a fixed Frobenius distance away from
// every multiple of the induced metric.
struct UmbilicWitnessReport {
    std::vector<VerticalVector> frame;  // G-orthonormal basis of the split distribution
    Eigen::MatrixXd second_form;        // values on that basis
    double closest_scale = 0.0;         // trace/(2n-2), the best metric multiple
    double witness = 0.0;               // Frobenius distance to that multiple
    double prime_derivative = 0.0;      // covariant-derivative residual over coordinate probes
    double unit_normal = 0.0;           // |G(n', n') - 1| for the normalized complement
    double block_contrast = 0.0;        // |F^2 - K^2| at the point
};

// The Levi-Civita connection of the product metric on one leaf, with the
// identity checks of the geometry built on top of it. Ops come in two
// layers: frame-level cores for callers that reuse one expansion across
// several checks, and point-level wrappers that build the frame themselves.
class LeafConnection {
  public:
    explicit LeafConnection(Leaf leaf);

    const Leaf& leaf() const { return leaf_; }
    LeafFrame frame(const BigTangentPoint& at) const { return leaf_.frame(at); }

    // Covariant derivative in jet form: direction components X, argument
    // components Y (2n each, in the frame's context). Each block pairs the
    // directional derivative of Y's components with the matching
    // coefficient contraction; the result sits one order lower.
    std::vector<Jet> covariant_jets(const LeafFrame& f, std::span<const Jet> X,
                                    std::span<const Jet> Y) const;

    // Lie bracket of two component-jet fields, one order lower.
    std::vector<Jet> bracket_jets(const LeafFrame& f, std::span<const Jet> X,
                                  std::span<const Jet> Y) const;

    VerticalVector covariant_derivative(const LeafFrame& f, const VerticalVector& X,
                                        const VerticalField& Y) const;
    VerticalVector covariant_derivative(const VerticalVector& X, const VerticalField& Y,
                                        const BigTangentPoint& at) const;

    LeviCivitaReport levi_civita_check(const LeafFrame& f) const;
    LeviCivitaReport levi_civita_check(const BigTangentPoint& at) const;

    LemmaReport lemma_checks(const LeafFrame& f, const VerticalVector& X,
                             const VerticalVector& Y) const;
    LemmaReport lemma_checks(const VerticalVector& X, const VerticalVector& Y,
                             const BigTangentPoint& at) const;

    // B(X, Y) = G(nabla_X Y~, E)/norm with Y~ the projected constant
    // extension of Y; both inputs are pushed through the projector first so
    // the form only sees directions inside the kernel of zeta.
    double second_fundamental_form(const LeafFrame& f, const VerticalVector& X,
                                   const VerticalVector& Y) const;
    double second_fundamental_form(const VerticalVector& X, const VerticalVector& Y,
                                   const BigTangentPoint& at) const;

    CurvatureReport curvature_check(const LeafFrame& f, const VerticalVector& X) const;
    CurvatureReport curvature_check(const VerticalVector& X, const BigTangentPoint& at) const;

    // Frame indices i, j select the projected coordinate pair: both from
    // the y side (yy), mixed (yp), or both from the p side (pp).
    IntegrabilityReport integrability_check(const LeafFrame& f, int i, int j,
                                            FramePairKind kind) const;
    IntegrabilityReport integrability_check(int i, int j, FramePairKind kind,
                                            const BigTangentPoint& at) const;

    SubfoliationReport subfoliation_check(const LeafFrame& f) const;
    SubfoliationReport subfoliation_check(const BigTangentPoint& at) const;

    UmbilicWitnessReport non_umbilic_witness(const LeafFrame& f) const;
    UmbilicWitnessReport non_umbilic_witness(const BigTangentPoint& at) const;

  private:
    Leaf leaf_;
};

// Average of the second fundamental form over a G-orthonormal basis of the
// kernel of zeta (2n-1 directions); -1 exactly on the unit level set
// F^2 + K^2 = 1.
double mean_curvature(const LeafConnection& c, const LeafFrame& f);
double mean_curvature(const LeafConnection& c, const BigTangentPoint& at);

// G-gradient of a scalar jet at the frame's point: block metric inverses
// applied to the two halves of the first-order coefficients.
VerticalVector metric_gradient(const LeafFrame& f, const Jet& value);

// Pivoted Gram-Schmidt against the vertical metric: picks the candidate
// with the largest remaining G-norm (lowest index on exact ties),
// normalizes, deflates the rest, and drops candidates whose remaining norm
// falls below `relative_floor` times the largest initial norm.
std::vector<VerticalVector> gram_schmidt_G(const VerticalMetricData& m,
                                           std::vector<VerticalVector> candidates,
                                           double relative_floor = 1e-12);

inline VerticalVector covariant_derivative(const LeafConnection& c, const VerticalVector& X,
                                           const VerticalField& Y, const BigTangentPoint& at) {
    return c.covariant_derivative(X, Y, at);
}

inline LemmaReport lemma_checks(const LeafConnection& c, const VerticalVector& X,
                                const VerticalVector& Y, const BigTangentPoint& at) {
    return c.lemma_checks(X, Y, at);
}

inline double second_fundamental_form(const LeafConnection& c, const VerticalVector& X,
                                      const VerticalVector& Y, const BigTangentPoint& at) {
    return c.second_fundamental_form(X, Y, at);
}

inline CurvatureReport curvature_check(const LeafConnection& c, const VerticalVector& X,
                                       const BigTangentPoint& at) {
    return c.curvature_check(X, at);
}

inline IntegrabilityReport integrability_check(const LeafConnection& c, int i, int j,
                                               FramePairKind kind, const BigTangentPoint& at) {
    return c.integrability_check(i, j, kind, at);
}

inline UmbilicWitnessReport non_umbilic_witness(const LeafConnection& c,
                                                const BigTangentPoint& at) {
    return c.non_umbilic_witness(at);
}

}  // namespace bigtan
