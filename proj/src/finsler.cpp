#include "bigtan/finsler.hpp"

#include <cmath>
#include <string>

namespace bigtan {

const char* family_name(MetricFamily family) {
    switch (family) {
        case MetricFamily::euclidean: return "euclidean";
        case MetricFamily::riemannian_conformal: return "riemannian_conformal";
        case MetricFamily::randers: return "randers";
    }
    return "?";
}

MetricFamily family_from_name(const std::string& name) {
    if (name == "euclidean") return MetricFamily::euclidean;
    if (name == "riemannian_conformal" || name == "conformal") {
        return MetricFamily::riemannian_conformal;
    }
    if (name == "randers") return MetricFamily::randers;
    throw ArgumentError("unknown metric family: " + name);
}

double EulerReport::max() const {
    double m = lower_vs_g_y;
    m = std::max(m, f2_vs_quadratic);
    m = std::max(m, f2_vs_pairing);
    m = std::max(m, cartan_radial);
    m = std::max(m, homogeneity);
    return m;
}

namespace {

void check_dim(int dim) {
    if (dim < 2 || dim > 4) {
        throw ArgumentError("metric family dimension must be 2, 3 or 4, got " +
                            std::to_string(dim));
    }
}

bool all_zero(std::span<const double> y) {
    for (double v : y) {
        if (v != 0.0) return false;
    }
    return true;
}

}  // namespace

FinslerStructure FinslerStructure::euclidean(int dim) {
    check_dim(dim);
    FinslerStructure s;
    s.family_ = MetricFamily::euclidean;
    s.dim_ = dim;
    return s;
}

FinslerStructure FinslerStructure::conformal(int dim, double eps) {
    check_dim(dim);
    FinslerStructure s;
    s.family_ = MetricFamily::riemannian_conformal;
    s.dim_ = dim;
    s.eps_ = eps;
    return s;
}

FinslerStructure FinslerStructure::randers(int dim, const Eigen::VectorXd& drift) {
    check_dim(dim);
    if (drift.size() != dim) {
        throw ArgumentError("randers drift covector has wrong dimension");
    }
    if (drift.norm() >= 1.0) {
        throw ArgumentError("randers drift must have Euclidean norm < 1");
    }
    FinslerStructure s;
    s.family_ = MetricFamily::randers;
    s.dim_ = dim;
    s.drift_ = drift;
    return s;
}

FinslerStructure FinslerStructure::with_linear_chart(const Eigen::MatrixXd& map) const {
    if (map.rows() != dim_ || map.cols() != dim_) {
        throw ArgumentError("chart map must be square of the structure dimension");
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(map);
    if (!lu.isInvertible()) {
        throw ArgumentError("chart map is singular");
    }
    FinslerStructure s = *this;
    const Eigen::MatrixXd inv = lu.inverse();
    s.chart_inv_ = s.has_chart_ ? Eigen::MatrixXd(chart_inv_ * inv) : inv;
    s.has_chart_ = true;
    return s;
}

template <class S>
S FinslerStructure::eval(std::span<const double> x, std::span<const S> y) const {
    using std::sqrt;

    // Chart composition: evaluate the base formula at A^{-1} x, A^{-1} y.
    Eigen::VectorXd xt(dim_);
    for (int i = 0; i < dim_; ++i) xt[i] = x[i];
    if (has_chart_) xt = chart_inv_ * xt;

    std::vector<S> yt;
    yt.reserve(dim_);
    if (has_chart_) {
        for (int i = 0; i < dim_; ++i) {
            S acc = y[0] * chart_inv_(i, 0);
            for (int j = 1; j < dim_; ++j) acc = acc + y[j] * chart_inv_(i, j);
            yt.push_back(std::move(acc));
        }
    } else {
        yt.assign(y.begin(), y.end());
    }

    S quad = yt[0] * yt[0];
    for (int i = 1; i < dim_; ++i) quad = quad + yt[i] * yt[i];

    switch (family_) {
        case MetricFamily::euclidean:
            return quad;
        case MetricFamily::riemannian_conformal:
            return quad * std::exp(2.0 * eps_ * std::sin(xt[0]));
        case MetricFamily::randers: {
            S beta = yt[0] * drift_[0];
            for (int i = 1; i < dim_; ++i) beta = beta + yt[i] * drift_[i];
            S f = sqrt(quad) + beta;
            return f * f;
        }
    }
    throw ArgumentError("unreachable metric family");
}

double FinslerStructure::f2(std::span<const double> x, std::span<const double> y) const {
    if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_) {
        throw ArgumentError("f2: argument dimension mismatch");
    }
    if (all_zero(y)) throw ZeroSectionError("f2: fiber argument on the zero section");
    return eval<double>(x, y);
}

Jet FinslerStructure::f2_jet(std::span<const double> x, std::span<const double> y,
                             const JetContext& ctx, int y_offset) const {
    if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_) {
        throw ArgumentError("f2_jet: argument dimension mismatch");
    }
    if (y_offset < 0 || y_offset + dim_ > ctx.num_vars()) {
        throw ArgumentError("f2_jet: fiber variables do not fit in the context");
    }
    if (all_zero(y)) throw ZeroSectionError("f2_jet: fiber argument on the zero section");
    std::vector<Jet> yj;
    yj.reserve(dim_);
    for (int i = 0; i < dim_; ++i) yj.push_back(Jet::variable(ctx, y_offset + i, y[i]));
    return eval<Jet>(x, yj);
}

Jet FinslerStructure::f2_apply(std::span<const double> x, std::span<const Jet> y) const {
    if (static_cast<int>(x.size()) != dim_ || static_cast<int>(y.size()) != dim_) {
        throw ArgumentError("f2_apply: argument dimension mismatch");
    }
    bool zero = true;
    for (const Jet& j : y) zero = zero && j.value() == 0.0;
    if (zero) throw ZeroSectionError("f2_apply: fiber argument on the zero section");
    return eval<Jet>(x, y);
}

Eigen::MatrixXd guarded_spd_inverse(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    const auto& ev = es.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw DegenerateMetricError(std::string(what) +
                                    ": tensor is not safely positive definite");
    }
    return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

FundamentalData FinslerStructure::fundamental_data(std::span<const double> x,
                                                   std::span<const double> y) const {
    JetContext ctx(dim_, 3);
    const Jet f2 = f2_jet(x, y, ctx);

    FundamentalData d{0.0, Eigen::VectorXd(dim_), Eigen::MatrixXd(dim_, dim_),
                      Eigen::MatrixXd(dim_, dim_), Tensor3(dim_)};
    d.F2 = f2.value();
    std::vector<int> multi(dim_, 0);
    for (int i = 0; i < dim_; ++i) {
        multi.assign(dim_, 0);
        multi[i] = 1;
        d.y_lower[i] = 0.5 * f2.partial(multi);
    }
    for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
            multi.assign(dim_, 0);
            multi[i] += 1;
            multi[j] += 1;
            d.g(i, j) = d.g(j, i) = 0.5 * f2.partial(multi);
        }
    }
    for (int i = 0; i < dim_; ++i) {
        for (int j = i; j < dim_; ++j) {
            for (int k = j; k < dim_; ++k) {
                multi.assign(dim_, 0);
                multi[i] += 1;
                multi[j] += 1;
                multi[k] += 1;
                const double c = 0.25 * f2.partial(multi);
                d.cartan(i, j, k) = d.cartan(i, k, j) = d.cartan(j, i, k) = c;
                d.cartan(j, k, i) = d.cartan(k, i, j) = d.cartan(k, j, i) = c;
            }
        }
    }
    d.g_inv = guarded_spd_inverse(d.g, "fundamental tensor");
    return d;
}

EulerReport FinslerStructure::euler_identity_check(std::span<const double> x,
                                                   std::span<const double> y) const {
    const FundamentalData d = fundamental_data(x, y);
    Eigen::VectorXd yv(dim_);
    for (int i = 0; i < dim_; ++i) yv[i] = y[i];

    EulerReport r{};
    r.lower_vs_g_y = (d.y_lower - d.g * yv).cwiseAbs().maxCoeff();
    r.f2_vs_quadratic = std::abs(d.F2 - yv.dot(d.g * yv));
    r.f2_vs_pairing = std::abs(d.F2 - d.y_lower.dot(d.g_inv * d.y_lower));
    r.cartan_radial = 0.0;
    for (int i = 0; i < dim_; ++i) {
        for (int j = 0; j < dim_; ++j) {
            double acc = 0.0;
            for (int k = 0; k < dim_; ++k) acc += d.cartan(i, j, k) * yv[k];
            r.cartan_radial = std::max(r.cartan_radial, std::abs(acc));
        }
    }
    r.homogeneity = 0.0;
    for (double lambda : {0.5, 2.0, 7.0}) {
        Eigen::VectorXd ys = lambda * yv;
        const double f2s = f2(x, {ys.data(), static_cast<std::size_t>(dim_)});
        r.homogeneity = std::max(r.homogeneity, std::abs(f2s - lambda * lambda * d.F2));
    }
    return r;
}

template double FinslerStructure::eval<double>(std::span<const double>,
                                               std::span<const double>) const;
template Jet FinslerStructure::eval<Jet>(std::span<const double>, std::span<const Jet>) const;

}  // namespace bigtan
