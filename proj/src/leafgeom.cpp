#include "bigtan/leafgeom.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "bigtan/errors.hpp"
#include "bigtan/seeding.hpp"

namespace bigtan {

namespace {

std::span<const double> view(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

BigTangentPoint checked_point(const Leaf& leaf, BigTangentPoint at) {
    const int n = leaf.dim();
    if (at.x.size() != n || at.y.size() != n || at.p.size() != n) {
        throw ArgumentError("LeafFrame: point dimension does not match the leaf");
    }
    if (!leaf.contains(at)) {
        throw ArgumentError("LeafFrame: base coordinates differ from the frozen base");
    }
    return at;
}

VerticalVector values_of(std::span<const Jet> comps) {
    const int n = static_cast<int>(comps.size()) / 2;
    VerticalVector out = VerticalVector::zero(n);
    for (int i = 0; i < n; ++i) {
        out.comp1[i] = comps[i].value();
        out.comp2[i] = comps[n + i].value();
    }
    return out;
}

// Product of two n x n jet matrices stored row-major.
std::vector<Jet> jet_matmul(int n, const std::vector<Jet>& a, const std::vector<Jet>& b) {
    std::vector<Jet> out;
    out.reserve(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Jet acc = a[static_cast<std::size_t>(i) * n] * b[static_cast<std::size_t>(j)];
            for (int k = 1; k < n; ++k) {
                acc += a[static_cast<std::size_t>(i) * n + k] * b[static_cast<std::size_t>(k) * n + j];
            }
            out.push_back(std::move(acc));
        }
    }
    return out;
}

// Inverse of a jet matrix from its value-part inverse: with D the
// zero-value-part remainder, (M0 + D)^{-1} = sum_k (-M0^{-1} D)^k M0^{-1},
// and the sum terminates at the truncation order because every factor of D
// raises the minimal degree.
std::vector<Jet> invert_jet_matrix(int n, const std::vector<Jet>& m,
                                   const Eigen::MatrixXd& value_inv) {
    const JetContext& ctx = m.front().context();
    std::vector<Jet> r0, delta;
    r0.reserve(m.size());
    delta.reserve(m.size());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            r0.push_back(Jet::constant(ctx, value_inv(i, j)));
            delta.push_back(m[static_cast<std::size_t>(i) * n + j] -
                            m[static_cast<std::size_t>(i) * n + j].value());
        }
    }
    const std::vector<Jet> a = jet_matmul(n, r0, delta);
    std::vector<Jet> acc = r0;
    std::vector<Jet> cur = r0;
    for (int step = 0; step < ctx.max_order(); ++step) {
        cur = jet_matmul(n, a, cur);
        for (std::size_t k = 0; k < cur.size(); ++k) {
            cur[k] = -cur[k];
            acc[k] += cur[k];
        }
    }
    return acc;
}

Eigen::MatrixXd stack_columns(const std::vector<VerticalVector>& cols) {
    const int n = cols.empty() ? 0 : cols.front().dim();
    Eigen::MatrixXd m(2 * n, static_cast<int>(cols.size()));
    for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
        m.col(j).head(n) = cols[static_cast<std::size_t>(j)].comp1;
        m.col(j).tail(n) = cols[static_cast<std::size_t>(j)].comp2;
    }
    return m;
}

int rank_of(const Eigen::MatrixXd& m, double threshold) {
    if (m.cols() == 0) return 0;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    qr.setThreshold(threshold);
    return static_cast<int>(qr.rank());
}

// Infinity-norm residual of the least-squares projection of v onto the span
// of the columns of m.
double span_residual(const Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
    const Eigen::VectorXd alpha = m.colPivHouseholderQr().solve(v);
    return (m * alpha - v).lpNorm<Eigen::Infinity>();
}

}  // namespace

Leaf::Leaf(FinslerStructure structure, Eigen::VectorXd base, NewtonSettings solver)
    : base_(std::move(base)), dual_(std::move(structure), solver) {
    if (base_.size() != dual_.dim()) {
        throw ArgumentError("Leaf: base point has " + std::to_string(base_.size()) +
                            " coordinates, structure expects " + std::to_string(dual_.dim()));
    }
    if (2 * dual_.dim() > 16) {
        throw ArgumentError("Leaf: dimension " + std::to_string(dual_.dim()) +
                            " exceeds the 8 supported by the jet backend");
    }
}

BigTangentPoint Leaf::point(Eigen::VectorXd y, Eigen::VectorXd p) const {
    return BigTangentPoint{base_, std::move(y), std::move(p)};
}

bool Leaf::contains(const BigTangentPoint& at) const {
    return at.x.size() == base_.size() && (at.x.array() == base_.array()).all();
}

LeafFrame Leaf::frame(const BigTangentPoint& at) const { return LeafFrame(*this, at); }

LeafFrame::LeafFrame(const Leaf& leaf, BigTangentPoint at)
    : n_(leaf.dim()),
      point_(checked_point(leaf, std::move(at))),
      ctx_(2 * n_, 4),
      f2_(leaf.structure().f2_jet(view(point_.x), view(point_.y), ctx_, 0)),
      dual_(leaf.dual().k2_jet(view(point_.x), view(point_.p), ctx_, n_)),
      norm_(sqrt(f2_ + dual_.k2)) {
    coords_.reserve(2 * n_);
    for (int k = 0; k < n_; ++k) coords_.push_back(Jet::variable(ctx_, k, point_.y[k]));
    for (int k = 0; k < n_; ++k) coords_.push_back(Jet::variable(ctx_, n_ + k, point_.p[k]));

    y_lower_.reserve(n_);
    p_upper_.reserve(n_);
    for (int i = 0; i < n_; ++i) y_lower_.push_back(0.5 * f2_.derivative(i));
    for (int i = 0; i < n_; ++i) p_upper_.push_back(0.5 * dual_.k2.derivative(n_ + i));

    g_.reserve(static_cast<std::size_t>(n_) * n_);
    g_star_.reserve(static_cast<std::size_t>(n_) * n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            g_.push_back(y_lower_[static_cast<std::size_t>(i)].derivative(j));
            g_star_.push_back(p_upper_[static_cast<std::size_t>(i)].derivative(n_ + j));
        }
    }

    Eigen::MatrixXd g0(n_, n_), gs0(n_, n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            g0(i, j) = g_[static_cast<std::size_t>(i) * n_ + j].value();
            gs0(i, j) = g_star_[static_cast<std::size_t>(i) * n_ + j].value();
        }
    }
    g_inv_ = invert_jet_matrix(n_, g_, guarded_spd_inverse(g0, "leaf metric (y block)"));
    g_star_inv_ =
        invert_jet_matrix(n_, g_star_, guarded_spd_inverse(gs0, "leaf metric (p block)"));

    // Coefficient blocks of the connection: one fiber derivative of the
    // block metric contracted with the block inverse. Total symmetry of the
    // derivative collapses the usual three-term combination to this one.
    cy_.reserve(static_cast<std::size_t>(n_) * n_ * n_);
    cp_.reserve(static_cast<std::size_t>(n_) * n_ * n_);
    for (int i = 0; i < n_; ++i) {
        for (int j = 0; j < n_; ++j) {
            std::vector<Jet> dgy, dgp;
            dgy.reserve(n_);
            dgp.reserve(n_);
            for (int l = 0; l < n_; ++l) {
                dgy.push_back(g_[static_cast<std::size_t>(j) * n_ + l].derivative(i));
                dgp.push_back(g_star_[static_cast<std::size_t>(j) * n_ + l].derivative(n_ + i));
            }
            for (int k = 0; k < n_; ++k) {
                Jet accy = g_inv_[static_cast<std::size_t>(0) * n_ + k] * dgy[0];
                Jet accp = g_star_inv_[static_cast<std::size_t>(0) * n_ + k] * dgp[0];
                for (int l = 1; l < n_; ++l) {
                    accy += g_inv_[static_cast<std::size_t>(l) * n_ + k] * dgy[static_cast<std::size_t>(l)];
                    accp += g_star_inv_[static_cast<std::size_t>(l) * n_ + k] * dgp[static_cast<std::size_t>(l)];
                }
                cy_.push_back(0.5 * accy);
                cp_.push_back(0.5 * accp);
            }
        }
    }
}

const Jet& LeafFrame::coordinate(int k) const {
    if (k < 0 || k >= 2 * n_) throw ArgumentError("LeafFrame::coordinate: index out of range");
    return coords_[static_cast<std::size_t>(k)];
}

const Jet& LeafFrame::y_lower(int i) const {
    if (i < 0 || i >= n_) throw ArgumentError("LeafFrame::y_lower: index out of range");
    return y_lower_[static_cast<std::size_t>(i)];
}

const Jet& LeafFrame::p_upper(int i) const {
    if (i < 0 || i >= n_) throw ArgumentError("LeafFrame::p_upper: index out of range");
    return p_upper_[static_cast<std::size_t>(i)];
}

const Jet& LeafFrame::g(int i, int j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
        throw ArgumentError("LeafFrame::g: index out of range");
    return g_[static_cast<std::size_t>(i) * n_ + j];
}

const Jet& LeafFrame::g_star(int i, int j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
        throw ArgumentError("LeafFrame::g_star: index out of range");
    return g_star_[static_cast<std::size_t>(i) * n_ + j];
}

const Jet& LeafFrame::g_inv(int i, int j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
        throw ArgumentError("LeafFrame::g_inv: index out of range");
    return g_inv_[static_cast<std::size_t>(i) * n_ + j];
}

const Jet& LeafFrame::g_star_inv(int i, int j) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_)
        throw ArgumentError("LeafFrame::g_star_inv: index out of range");
    return g_star_inv_[static_cast<std::size_t>(i) * n_ + j];
}

const Jet& LeafFrame::christoffel_y(int i, int j, int k) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_ || k < 0 || k >= n_)
        throw ArgumentError("LeafFrame::christoffel_y: index out of range");
    return cy_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
}

const Jet& LeafFrame::christoffel_p(int i, int j, int k) const {
    if (i < 0 || i >= n_ || j < 0 || j >= n_ || k < 0 || k >= n_)
        throw ArgumentError("LeafFrame::christoffel_p: index out of range");
    return cp_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
}

VerticalMetricData LeafFrame::metric_data() const {
    VerticalMetricData m;
    m.point = point_;
    m.g.resize(n_, n_);
    m.g_star.resize(n_, n_);
    m.y_lower.resize(n_);
    m.p_upper.resize(n_);
    for (int i = 0; i < n_; ++i) {
        m.y_lower[i] = y_lower_[static_cast<std::size_t>(i)].value();
        m.p_upper[i] = p_upper_[static_cast<std::size_t>(i)].value();
        for (int j = 0; j < n_; ++j) {
            m.g(i, j) = g_[static_cast<std::size_t>(i) * n_ + j].value();
            m.g_star(i, j) = g_star_[static_cast<std::size_t>(i) * n_ + j].value();
        }
    }
    m.F2 = f2_.value();
    m.K2 = dual_.k2.value();
    m.norm_E = norm_.value();
    return m;
}

Jet LeafFrame::directional(std::span<const Jet> components, const Jet& f) const {
    if (static_cast<int>(components.size()) != 2 * n_) {
        throw ArgumentError("LeafFrame::directional: expected 2n direction components");
    }
    Jet acc = components[0] * f.derivative(0);
    for (int m = 1; m < 2 * n_; ++m) {
        acc += components[static_cast<std::size_t>(m)] * f.derivative(m);
    }
    return acc;
}

double LeafFrame::direct(const VerticalVector& X, const Jet& f) const {
    if (X.dim() != n_) throw ArgumentError("LeafFrame::direct: direction has wrong dimension");
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) {
        acc += X.comp1[i] * f.derivative(i).value();
        acc += X.comp2[i] * f.derivative(n_ + i).value();
    }
    return acc;
}

Jet LeafFrame::euler_pairing(std::span<const Jet> components) const {
    if (static_cast<int>(components.size()) != 2 * n_) {
        throw ArgumentError("LeafFrame::euler_pairing: expected 2n components");
    }
    Jet acc = y_lower_[0] * components[0];
    for (int i = 1; i < n_; ++i) acc += y_lower_[static_cast<std::size_t>(i)] * components[static_cast<std::size_t>(i)];
    for (int i = 0; i < n_; ++i) acc += p_upper_[static_cast<std::size_t>(i)] * components[static_cast<std::size_t>(n_ + i)];
    return acc;
}

Jet LeafFrame::form_zeta(std::span<const Jet> components) const {
    return euler_pairing(components) / norm_;
}

VerticalField::VerticalField(Builder builder) : builder_(std::move(builder)) {
    if (!builder_) throw ArgumentError("VerticalField: empty builder");
}

std::vector<Jet> VerticalField::components(const LeafFrame& frame) const {
    std::vector<Jet> out = builder_(frame);
    if (static_cast<int>(out.size()) != 2 * frame.dim()) {
        throw ArgumentError("VerticalField: builder returned " + std::to_string(out.size()) +
                            " components, expected " + std::to_string(2 * frame.dim()));
    }
    return out;
}

VerticalVector VerticalField::value(const LeafFrame& frame) const {
    return values_of(components(frame));
}

VerticalField VerticalField::constant(VerticalVector v) {
    return VerticalField([v = std::move(v)](const LeafFrame& f) {
        if (v.dim() != f.dim()) {
            throw ArgumentError("VerticalField::constant: vector dimension does not match");
        }
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int i = 0; i < f.dim(); ++i) out.push_back(Jet::constant(f.ctx(), v.comp1[i]));
        for (int i = 0; i < f.dim(); ++i) out.push_back(Jet::constant(f.ctx(), v.comp2[i]));
        return out;
    });
}

VerticalField VerticalField::coordinate(int index) {
    return VerticalField([index](const LeafFrame& f) {
        if (index < 0 || index >= 2 * f.dim()) {
            throw ArgumentError("VerticalField::coordinate: index out of range");
        }
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < 2 * f.dim(); ++k) {
            out.push_back(Jet::constant(f.ctx(), k == index ? 1.0 : 0.0));
        }
        return out;
    });
}

VerticalField VerticalField::euler1() {
    return VerticalField([](const LeafFrame& f) {
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < f.dim(); ++k) out.push_back(f.coordinate(k));
        for (int k = 0; k < f.dim(); ++k) out.push_back(Jet::constant(f.ctx(), 0.0));
        return out;
    });
}

VerticalField VerticalField::euler2() {
    return VerticalField([](const LeafFrame& f) {
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < f.dim(); ++k) out.push_back(Jet::constant(f.ctx(), 0.0));
        for (int k = 0; k < f.dim(); ++k) out.push_back(f.coordinate(f.dim() + k));
        return out;
    });
}

VerticalField VerticalField::euler() {
    return VerticalField([](const LeafFrame& f) {
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < 2 * f.dim(); ++k) out.push_back(f.coordinate(k));
        return out;
    });
}

VerticalField VerticalField::euler_prime() {
    return VerticalField([](const LeafFrame& f) {
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < f.dim(); ++k) out.push_back(f.k2() * f.coordinate(k));
        for (int k = 0; k < f.dim(); ++k) {
            out.push_back(-(f.f2() * f.coordinate(f.dim() + k)));
        }
        return out;
    });
}

VerticalField VerticalField::unit_euler() {
    return VerticalField([](const LeafFrame& f) {
        std::vector<Jet> out;
        out.reserve(2 * f.dim());
        for (int k = 0; k < 2 * f.dim(); ++k) out.push_back(f.coordinate(k) / f.norm());
        return out;
    });
}

VerticalField VerticalField::polynomial(std::vector<PolynomialComponent> components) {
    return VerticalField([comps = std::move(components)](const LeafFrame& f) {
        const int m = 2 * f.dim();
        if (static_cast<int>(comps.size()) != m) {
            throw ArgumentError("VerticalField::polynomial: expected one entry per component");
        }
        std::vector<Jet> out;
        out.reserve(m);
        for (const PolynomialComponent& c : comps) {
            Jet acc = Jet::constant(f.ctx(), c.constant);
            if (c.linear.size() != 0) {
                if (c.linear.size() != m) {
                    throw ArgumentError("VerticalField::polynomial: linear block has wrong size");
                }
                for (int k = 0; k < m; ++k) {
                    if (c.linear[k] != 0.0) acc += c.linear[k] * f.coordinate(k);
                }
            }
            if (c.quadratic.size() != 0) {
                if (c.quadratic.rows() != m || c.quadratic.cols() != m) {
                    throw ArgumentError(
                        "VerticalField::polynomial: quadratic block has wrong size");
                }
                for (int k = 0; k < m; ++k) {
                    for (int l = 0; l < m; ++l) {
                        const double q = 0.5 * (c.quadratic(k, l) + c.quadratic(l, k));
                        if (q != 0.0) acc += q * (f.coordinate(k) * f.coordinate(l));
                    }
                }
            }
            out.push_back(std::move(acc));
        }
        return out;
    });
}

VerticalField VerticalField::projected(ProjectorKind kind) const {
    return VerticalField([base = builder_, kind](const LeafFrame& f) {
        std::vector<Jet> w = base(f);
        const int n = f.dim();
        if (static_cast<int>(w.size()) != 2 * n) {
            throw ArgumentError("VerticalField::projected: builder returned wrong arity");
        }
        std::vector<Jet> out;
        out.reserve(2 * n);
        switch (kind) {
            case ProjectorKind::P1: {
                Jet s = f.y_lower(0) * w[0];
                for (int i = 1; i < n; ++i) s += f.y_lower(i) * w[static_cast<std::size_t>(i)];
                s = s / f.f2();
                for (int k = 0; k < n; ++k) out.push_back(w[static_cast<std::size_t>(k)] - s * f.coordinate(k));
                for (int k = 0; k < n; ++k) out.push_back(Jet::constant(f.ctx(), 0.0));
                break;
            }
            case ProjectorKind::P2: {
                Jet s = f.p_upper(0) * w[static_cast<std::size_t>(n)];
                for (int i = 1; i < n; ++i) s += f.p_upper(i) * w[static_cast<std::size_t>(n + i)];
                s = s / f.k2();
                for (int k = 0; k < n; ++k) out.push_back(Jet::constant(f.ctx(), 0.0));
                for (int k = 0; k < n; ++k) {
                    out.push_back(w[static_cast<std::size_t>(n + k)] - s * f.coordinate(n + k));
                }
                break;
            }
            case ProjectorKind::P: {
                Jet s = f.euler_pairing(w) / (f.f2() + f.k2());
                for (int k = 0; k < 2 * n; ++k) {
                    out.push_back(w[static_cast<std::size_t>(k)] - s * f.coordinate(k));
                }
                break;
            }
        }
        return out;
    });
}

double LeviCivitaReport::max() const {
    return std::max({radial_contraction_y, radial_contraction_p, compatibility_y,
                     compatibility_p, torsion_y, torsion_p});
}

double LemmaReport::max() const { return std::max({unit_euler, zeta, projector}); }

double CurvatureReport::max() const {
    return std::max({curvature, sectional, norm_homogeneity, frame_annihilation});
}

double IntegrabilityReport::max() const {
    return std::max({zeta_pairing, euler_pairing, random_pairing, split_bracket, euler_bracket});
}

LeafConnection::LeafConnection(Leaf leaf) : leaf_(std::move(leaf)) {}

std::vector<Jet> LeafConnection::covariant_jets(const LeafFrame& f, std::span<const Jet> X,
                                                std::span<const Jet> Y) const {
    const int n = f.dim();
    if (static_cast<int>(X.size()) != 2 * n || static_cast<int>(Y.size()) != 2 * n) {
        throw ArgumentError("covariant_jets: expected 2n components on both arguments");
    }
    std::vector<Jet> out;
    out.reserve(2 * n);
    for (int k = 0; k < n; ++k) {
        Jet acc = f.directional(X, Y[static_cast<std::size_t>(k)]);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                acc += f.christoffel_y(i, j, k) *
                       (X[static_cast<std::size_t>(i)] * Y[static_cast<std::size_t>(j)]);
            }
        }
        out.push_back(std::move(acc));
    }
    for (int k = 0; k < n; ++k) {
        Jet acc = f.directional(X, Y[static_cast<std::size_t>(n + k)]);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                acc += f.christoffel_p(i, j, k) *
                       (X[static_cast<std::size_t>(n + i)] * Y[static_cast<std::size_t>(n + j)]);
            }
        }
        out.push_back(std::move(acc));
    }
    return out;
}

std::vector<Jet> LeafConnection::bracket_jets(const LeafFrame& f, std::span<const Jet> X,
                                              std::span<const Jet> Y) const {
    const int n = f.dim();
    if (static_cast<int>(X.size()) != 2 * n || static_cast<int>(Y.size()) != 2 * n) {
        throw ArgumentError("bracket_jets: expected 2n components on both arguments");
    }
    std::vector<Jet> out;
    out.reserve(2 * n);
    for (int k = 0; k < 2 * n; ++k) {
        out.push_back(f.directional(X, Y[static_cast<std::size_t>(k)]) -
                      f.directional(Y, X[static_cast<std::size_t>(k)]));
    }
    return out;
}

VerticalVector LeafConnection::covariant_derivative(const LeafFrame& f, const VerticalVector& X,
                                                    const VerticalField& Y) const {
    if (X.dim() != f.dim()) {
        throw ArgumentError("covariant_derivative: direction has wrong dimension");
    }
    const auto Xj = VerticalField::constant(X).components(f);
    return values_of(covariant_jets(f, Xj, Y.components(f)));
}

VerticalVector LeafConnection::covariant_derivative(const VerticalVector& X,
                                                    const VerticalField& Y,
                                                    const BigTangentPoint& at) const {
    return covariant_derivative(frame(at), X, Y);
}

LeviCivitaReport LeafConnection::levi_civita_check(const LeafFrame& f) const {
    const int n = f.dim();
    LeviCivitaReport r;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            double cy = 0.0, cp = 0.0;
            for (int j = 0; j < n; ++j) {
                cy += f.christoffel_y(i, j, k).value() * f.point().y[j];
                cp += f.christoffel_p(i, j, k).value() * f.point().p[j];
            }
            r.radial_contraction_y = std::max(r.radial_contraction_y, std::abs(cy));
            r.radial_contraction_p = std::max(r.radial_contraction_p, std::abs(cp));
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int l = 0; l < n; ++l) {
                double rhs_y = 0.0, rhs_p = 0.0;
                for (int m = 0; m < n; ++m) {
                    rhs_y += f.christoffel_y(i, j, m).value() * f.g(m, l).value() +
                             f.christoffel_y(i, l, m).value() * f.g(j, m).value();
                    rhs_p += f.christoffel_p(i, j, m).value() * f.g_star(m, l).value() +
                             f.christoffel_p(i, l, m).value() * f.g_star(j, m).value();
                }
                r.compatibility_y = std::max(
                    r.compatibility_y, std::abs(f.g(j, l).derivative(i).value() - rhs_y));
                r.compatibility_p = std::max(
                    r.compatibility_p,
                    std::abs(f.g_star(j, l).derivative(n + i).value() - rhs_p));
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                r.torsion_y = std::max(r.torsion_y,
                                       std::abs(f.christoffel_y(i, j, k).value() -
                                                f.christoffel_y(j, i, k).value()));
                r.torsion_p = std::max(r.torsion_p,
                                       std::abs(f.christoffel_p(i, j, k).value() -
                                                f.christoffel_p(j, i, k).value()));
            }
        }
    }
    return r;
}

LeviCivitaReport LeafConnection::levi_civita_check(const BigTangentPoint& at) const {
    return levi_civita_check(frame(at));
}

LemmaReport LeafConnection::lemma_checks(const LeafFrame& f, const VerticalVector& X,
                                         const VerticalVector& Y) const {
    const VerticalMetricData md = f.metric_data();
    LemmaReport r;

    const auto Xj = VerticalField::constant(X).components(f);
    const auto Yj = VerticalField::constant(Y).components(f);
    const VerticalVector PX = projector_P(md, X, ProjectorKind::P);
    const VerticalVector PY = projector_P(md, Y, ProjectorKind::P);

    // The normalized Euler field differentiates to its projector image.
    const auto unit = VerticalField::unit_euler().components(f);
    const VerticalVector lhs1 = values_of(covariant_jets(f, Xj, unit));
    r.unit_euler = max_abs(lhs1 - (1.0 / md.norm_E) * PX);

    // The unit form differentiates to the projected pairing.
    const Jet zeta_y = f.form_zeta(Yj);
    const VerticalVector dxy = values_of(covariant_jets(f, Xj, Yj));
    const double lhs2 = f.direct(X, zeta_y) - liouville_forms(md, dxy).zeta;
    const double rhs2 = metric_G(md, PX, PY) / md.norm_E;
    r.zeta = std::abs(lhs2 - rhs2);

    // The projector differentiates to a rank-one correction along the Euler
    // field: (nabla_X P)Y + [G(PX,PY) E + norm * zeta(Y) PX]/norm^2 = 0.
    const auto PYf = VerticalField::constant(Y).projected(ProjectorKind::P);
    const VerticalVector lhs3 = values_of(covariant_jets(f, Xj, PYf.components(f))) -
                                projector_P(md, dxy, ProjectorKind::P);
    const double n2 = md.norm_E * md.norm_E;
    const VerticalVector rhs3 =
        (-metric_G(md, PX, PY) / n2) * liouville_fields(md).e +
        (-liouville_forms(md, Y).zeta / md.norm_E) * PX;
    r.projector = max_abs(lhs3 - rhs3);
    return r;
}

LemmaReport LeafConnection::lemma_checks(const VerticalVector& X, const VerticalVector& Y,
                                         const BigTangentPoint& at) const {
    return lemma_checks(frame(at), X, Y);
}

double LeafConnection::second_fundamental_form(const LeafFrame& f, const VerticalVector& X,
                                               const VerticalVector& Y) const {
    const VerticalMetricData md = f.metric_data();
    const VerticalVector PX = projector_P(md, X, ProjectorKind::P);
    const auto Xj = VerticalField::constant(PX).components(f);
    const auto Yf = VerticalField::constant(Y).projected(ProjectorKind::P);
    const auto d = covariant_jets(f, Xj, Yf.components(f));
    double pairing = 0.0;
    for (int i = 0; i < f.dim(); ++i) {
        pairing += f.y_lower(i).value() * d[static_cast<std::size_t>(i)].value();
        pairing += f.p_upper(i).value() * d[static_cast<std::size_t>(f.dim() + i)].value();
    }
    return pairing / md.norm_E;
}

double LeafConnection::second_fundamental_form(const VerticalVector& X, const VerticalVector& Y,
                                               const BigTangentPoint& at) const {
    return second_fundamental_form(frame(at), X, Y);
}

CurvatureReport LeafConnection::curvature_check(const LeafFrame& f,
                                                const VerticalVector& X) const {
    const int n = f.dim();
    const VerticalMetricData md = f.metric_data();
    CurvatureReport r;

    const auto Xj = VerticalField::constant(X).components(f);
    const auto Ej = VerticalField::euler().components(f);

    const auto inner_ee = covariant_jets(f, Ej, Ej);
    const auto t1 = covariant_jets(f, Xj, inner_ee);
    const auto inner_xe = covariant_jets(f, Xj, Ej);
    const auto t2 = covariant_jets(f, Ej, inner_xe);
    const auto br = bracket_jets(f, Xj, Ej);
    const auto t3 = covariant_jets(f, br, Ej);
    const VerticalVector curv = values_of(t1) - values_of(t2) - values_of(t3);
    r.curvature = max_abs(curv);

    const double gxx = metric_G(md, X, X);
    const double gxe = md.norm_E * liouville_forms(md, X).zeta;
    const double denom = gxx * md.norm_E * md.norm_E - gxe * gxe;
    const double scale = std::max(1.0, gxx * md.norm_E * md.norm_E);
    if (std::abs(denom) > 1e-10 * scale) {
        r.sectional = std::abs(metric_G(md, curv, X) / denom);
    }

    const LiouvilleFields lf = liouville_fields(md);
    r.norm_homogeneity = std::abs(f.direct(lf.e, f.norm()) - md.norm_E);

    for (int k = 0; k < 2 * n; ++k) {
        VerticalVector unit = VerticalVector::zero(n);
        if (k < n) {
            unit.comp1[k] = 1.0;
        } else {
            unit.comp2[k - n] = 1.0;
        }
        const VerticalVector w = projector_P(md, unit, ProjectorKind::P);
        r.frame_annihilation = std::max(r.frame_annihilation, std::abs(f.direct(w, f.norm())));
    }
    return r;
}

CurvatureReport LeafConnection::curvature_check(const VerticalVector& X,
                                                const BigTangentPoint& at) const {
    return curvature_check(frame(at), X);
}

IntegrabilityReport LeafConnection::integrability_check(const LeafFrame& f, int i, int j,
                                                        FramePairKind kind) const {
    const int n = f.dim();
    if (i < 0 || i >= n || j < 0 || j >= n) {
        throw ArgumentError("integrability_check: frame index out of range");
    }
    const int a = (kind == FramePairKind::pp) ? n + i : i;
    const int b = (kind == FramePairKind::yy) ? j : n + j;
    const VerticalMetricData md = f.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    IntegrabilityReport r;

    const auto Xc = VerticalField::coordinate(a).projected(ProjectorKind::P).components(f);
    const auto Yc = VerticalField::coordinate(b).projected(ProjectorKind::P).components(f);
    const VerticalVector br = values_of(bracket_jets(f, Xc, Yc));
    r.zeta_pairing = std::abs(liouville_forms(md, br).zeta);
    r.euler_pairing = std::abs(metric_G(md, br, lf.e));

    // A random pair of projected polynomial fields, deterministic in the
    // point and the frame indices.
    std::uint64_t h = fnv1a(f.point().y.data(), static_cast<std::size_t>(n) * sizeof(double));
    h = fnv1a(f.point().p.data(), static_cast<std::size_t>(n) * sizeof(double), h);
    SplitMix64 rng(mix_seed(h, (static_cast<std::uint64_t>(a) << 32) |
                                   static_cast<std::uint64_t>(b)));
    auto random_poly = [&]() {
        std::vector<VerticalField::PolynomialComponent> comps(2 * static_cast<std::size_t>(n));
        for (auto& c : comps) {
            c.constant = 2.0 * rng.uniform01() - 1.0;
            c.linear.resize(2 * n);
            for (int k = 0; k < 2 * n; ++k) c.linear[k] = 2.0 * rng.uniform01() - 1.0;
            c.quadratic.resize(2 * n, 2 * n);
            for (int k = 0; k < 2 * n; ++k) {
                for (int l = 0; l < 2 * n; ++l) c.quadratic(k, l) = 2.0 * rng.uniform01() - 1.0;
            }
        }
        return VerticalField::polynomial(std::move(comps)).projected(ProjectorKind::P);
    };
    const auto Xr = random_poly().components(f);
    const auto Yr = random_poly().components(f);
    const VerticalVector brr = values_of(bracket_jets(f, Xr, Yr));
    r.random_pairing = std::max(std::abs(liouville_forms(md, brr).zeta),
                                std::abs(metric_G(md, brr, lf.e)));

    // Split-block constructions commute outright: the first factor only
    // depends on y, the second only on p.
    const auto Xs = VerticalField::coordinate(i).projected(ProjectorKind::P1).components(f);
    const auto Ys =
        VerticalField::coordinate(n + (kind == FramePairKind::yy ? j : (b - n)))
            .projected(ProjectorKind::P2)
            .components(f);
    r.split_bracket = max_abs(values_of(bracket_jets(f, Xs, Ys)));

    const auto E1 = VerticalField::euler1().components(f);
    const auto E2 = VerticalField::euler2().components(f);
    r.euler_bracket = max_abs(values_of(bracket_jets(f, E1, E2)));
    return r;
}

IntegrabilityReport LeafConnection::integrability_check(int i, int j, FramePairKind kind,
                                                        const BigTangentPoint& at) const {
    return integrability_check(frame(at), i, j, kind);
}

SubfoliationReport LeafConnection::subfoliation_check(const LeafFrame& f) const {
    const int n = f.dim();
    const VerticalMetricData md = f.metric_data();
    const LiouvilleFields lf = liouville_fields(md);
    SubfoliationReport r;

    const Eigen::MatrixXd pair_mat = stack_columns({lf.e1, lf.e2});
    r.rank_euler_pair = rank_of(pair_mat, 1e-9);

    Eigen::VectorXd e_vec(2 * n), prime_vec(2 * n);
    e_vec.head(n) = lf.e.comp1;
    e_vec.tail(n) = lf.e.comp2;
    prime_vec.head(n) = lf.e_prime.comp1;
    prime_vec.tail(n) = lf.e_prime.comp2;
    r.euler_membership = span_residual(pair_mat, e_vec);
    r.prime_membership = std::max(span_residual(pair_mat, prime_vec),
                                  std::abs(liouville_forms(md, lf.e_prime).zeta));

    std::vector<VerticalVector> split_cols;
    for (int i = 0; i < n; ++i) {
        VerticalVector v = VerticalVector::zero(n);
        v.comp1[i] = 1.0;
        split_cols.push_back(projector_P(md, v, ProjectorKind::P1));
    }
    for (int i = 0; i < n; ++i) {
        VerticalVector v = VerticalVector::zero(n);
        v.comp2[i] = 1.0;
        split_cols.push_back(projector_P(md, v, ProjectorKind::P2));
    }
    r.rank_split = rank_of(stack_columns(split_cols), 1e-9);
    for (const VerticalVector& c : split_cols) {
        r.split_membership = std::max(r.split_membership,
                                      std::abs(liouville_forms(md, c).zeta));
    }

    std::vector<VerticalVector> kernel_cols;
    for (int k = 0; k < 2 * n; ++k) {
        VerticalVector v = VerticalVector::zero(n);
        if (k < n) {
            v.comp1[k] = 1.0;
        } else {
            v.comp2[k - n] = 1.0;
        }
        kernel_cols.push_back(projector_P(md, v, ProjectorKind::P));
    }
    r.rank_kernel = rank_of(stack_columns(kernel_cols), 1e-9);
    return r;
}

SubfoliationReport LeafConnection::subfoliation_check(const BigTangentPoint& at) const {
    return subfoliation_check(frame(at));
}

UmbilicWitnessReport LeafConnection::non_umbilic_witness(const LeafFrame& f) const {
    const int n = f.dim();
    const VerticalMetricData md = f.metric_data();
    UmbilicWitnessReport r;
    r.block_contrast = std::abs(md.F2 - md.K2);

    const double fk_norm = std::sqrt(md.F2) * std::sqrt(md.K2) * md.norm_E;
    const VerticalVector n_prime = (1.0 / fk_norm) * liouville_fields(md).e_prime;
    r.unit_normal = std::abs(metric_G(md, n_prime, n_prime) - 1.0);

    // G-orthonormal basis of the split distribution from the projected
    // coordinate candidates.
    std::vector<VerticalVector> cands;
    for (int i = 0; i < n; ++i) {
        VerticalVector v = VerticalVector::zero(n);
        v.comp1[i] = 1.0;
        cands.push_back(projector_P(md, v, ProjectorKind::P1));
    }
    for (int i = 0; i < n; ++i) {
        VerticalVector v = VerticalVector::zero(n);
        v.comp2[i] = 1.0;
        cands.push_back(projector_P(md, v, ProjectorKind::P2));
    }
    r.frame = gram_schmidt_G(md, std::move(cands));
    const int m = static_cast<int>(r.frame.size());

    // Second form of the split leaf against the normalized complement, with
    // the covariant derivative of the complement replaced by its block
    // contrast K^2 P1 - F^2 P2 (verified independently below).
    r.second_form.resize(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            const double gy = r.frame[static_cast<std::size_t>(a)].comp1.dot(
                md.g * r.frame[static_cast<std::size_t>(b)].comp1);
            const double gp = r.frame[static_cast<std::size_t>(a)].comp2.dot(
                md.g_star * r.frame[static_cast<std::size_t>(b)].comp2);
            r.second_form(a, b) = -(md.K2 * gy - md.F2 * gp) / fk_norm;
        }
    }
    if (m > 0) {
        r.closest_scale = r.second_form.trace() / m;
        r.witness = (r.second_form - r.closest_scale *
                                         Eigen::MatrixXd::Identity(m, m))
                        .norm();
    }

    // Independent jet check of the complement's covariant derivative along
    // each projected coordinate probe.
    const auto prime = VerticalField::euler_prime().components(f);
    for (int i = 0; i < 2 * n; ++i) {
        VerticalVector v = VerticalVector::zero(n);
        const ProjectorKind kind = (i < n) ? ProjectorKind::P1 : ProjectorKind::P2;
        if (i < n) {
            v.comp1[i] = 1.0;
        } else {
            v.comp2[i - n] = 1.0;
        }
        const auto Xf = VerticalField::coordinate(i).projected(kind);
        const VerticalVector lhs = values_of(covariant_jets(f, Xf.components(f), prime));
        const VerticalVector proj = projector_P(md, v, kind);
        const VerticalVector rhs = (i < n) ? md.K2 * proj : -md.F2 * proj;
        r.prime_derivative = std::max(r.prime_derivative, max_abs(lhs - rhs));
    }
    return r;
}

UmbilicWitnessReport LeafConnection::non_umbilic_witness(const BigTangentPoint& at) const {
    return non_umbilic_witness(frame(at));
}

double mean_curvature(const LeafConnection& c, const LeafFrame& f) {
    const int n = f.dim();
    const VerticalMetricData md = f.metric_data();
    std::vector<VerticalVector> cands;
    for (int k = 0; k < 2 * n; ++k) {
        VerticalVector v = VerticalVector::zero(n);
        if (k < n) {
            v.comp1[k] = 1.0;
        } else {
            v.comp2[k - n] = 1.0;
        }
        cands.push_back(projector_P(md, v, ProjectorKind::P));
    }
    const auto frame_vecs = gram_schmidt_G(md, std::move(cands));
    if (static_cast<int>(frame_vecs.size()) != 2 * n - 1) {
        throw DegenerateMetricError("mean_curvature: tangent frame is rank-deficient");
    }
    double acc = 0.0;
    for (const VerticalVector& e : frame_vecs) {
        acc += c.second_fundamental_form(f, e, e);
    }
    return acc / static_cast<double>(2 * n - 1);
}

double mean_curvature(const LeafConnection& c, const BigTangentPoint& at) {
    return mean_curvature(c, c.frame(at));
}

VerticalVector metric_gradient(const LeafFrame& f, const Jet& value) {
    const int n = f.dim();
    if (value.context().num_vars() != 2 * n) {
        throw ArgumentError("metric_gradient: jet does not live on this frame");
    }
    Eigen::VectorXd dy(n), dp(n);
    for (int i = 0; i < n; ++i) {
        dy[i] = value.derivative(i).value();
        dp[i] = value.derivative(n + i).value();
    }
    VerticalVector out = VerticalVector::zero(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            out.comp1[i] += f.g_inv(i, j).value() * dy[j];
            out.comp2[i] += f.g_star_inv(i, j).value() * dp[j];
        }
    }
    return out;
}

std::vector<VerticalVector> gram_schmidt_G(const VerticalMetricData& m,
                                           std::vector<VerticalVector> candidates,
                                           double relative_floor) {
    std::vector<VerticalVector> out;
    if (candidates.empty()) return out;
    std::vector<bool> alive(candidates.size(), true);
    double max_initial = 0.0;
    for (const VerticalVector& c : candidates) {
        max_initial = std::max(max_initial, metric_G(m, c, c));
    }
    const double floor = relative_floor * max_initial;
    for (;;) {
        int best = -1;
        double best_norm = floor;
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (!alive[k]) continue;
            const double nk = metric_G(m, candidates[k], candidates[k]);
            if (nk > best_norm) {
                best_norm = nk;
                best = static_cast<int>(k);
            }
        }
        if (best < 0) break;
        alive[static_cast<std::size_t>(best)] = false;
        const VerticalVector e =
            (1.0 / std::sqrt(best_norm)) * candidates[static_cast<std::size_t>(best)];
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            if (!alive[k]) continue;
            candidates[k] = candidates[k] - metric_G(m, candidates[k], e) * e;
        }
        out.push_back(e);
    }
    return out;
}

}  // namespace bigtan
