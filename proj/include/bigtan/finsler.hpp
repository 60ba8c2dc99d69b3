#pragma once

#include <Eigen/Dense>
#include <span>

#include "bigtan/jets.hpp"

namespace bigtan {

enum class MetricFamily {
    euclidean,             // F^2 = sum (y^i)^2
    riemannian_conformal,  // F^2 = e^{2 eps sin x^1} sum (y^i)^2
    randers,               // F = |y| + <b, y>, |b| < 1
};

const char* family_name(MetricFamily family);
MetricFamily family_from_name(const std::string& name);

// Third-order symmetric coefficient block, n^3 dense doubles.
class Tensor3 {
  public:
    explicit Tensor3(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n, 0.0) {}
    int dim() const { return n_; }
    double& operator()(int i, int j, int k) { return v_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k]; }
    double operator()(int i, int j, int k) const { return v_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k]; }

  private:
    int n_;
    std::vector<double> v_;
};

// Everything the squared norm determines at one fiber point:
//   y_lower_i = 1/2 dF^2/dy^i
//   g_ij      = 1/2 d^2F^2/dy^i dy^j
//   cartan    = 1/4 d^3F^2/dy^i dy^j dy^k
struct FundamentalData {
    double F2;
    Eigen::VectorXd y_lower;
    Eigen::MatrixXd g;
    Eigen::MatrixXd g_inv;
    Tensor3 cartan;
};

// Residuals of the classical homogeneity consequences at one fiber point.
struct EulerReport {
    double lower_vs_g_y;     // max_i |y_i - g_ij y^j|
    double f2_vs_quadratic;  // |F^2 - g_ij y^i y^j|
    double f2_vs_pairing;    // |F^2 - y_i g^{ij} y_j|
    double cartan_radial;    // max_ij |C_ijk y^k|
    double homogeneity;      // max over lambda in {1/2, 2, 7} of |F^2(x, l y) - l^2 F^2(x, y)|
    double max() const;
};

// One member of the built-in family catalogue, positively 2-homogeneous in
// the fiber variable and smooth off the zero section. An optional linear
// chart composition (see with_linear_chart) supports change-of-coordinates
// equivariance testing: the returned structure evaluates the base formula at
// (A^{-1} x, A^{-1} y).
class FinslerStructure {
  public:
    static FinslerStructure euclidean(int dim);
    static FinslerStructure conformal(int dim, double eps);
    static FinslerStructure randers(int dim, const Eigen::VectorXd& drift);

    FinslerStructure with_linear_chart(const Eigen::MatrixXd& map) const;

    MetricFamily family() const { return family_; }
    int dim() const { return dim_; }
    double conformal_eps() const { return eps_; }
    const Eigen::VectorXd& drift() const { return drift_; }

    double f2(std::span<const double> x, std::span<const double> y) const;

    // Expansion of F^2 in the fiber variable: y^i is seeded as context
    // variable (y_offset + i) at base value y[i]; x stays a constant.
    Jet f2_jet(std::span<const double> x, std::span<const double> y, const JetContext& ctx,
               int y_offset = 0) const;

    // Same formula applied to caller-provided jet arguments (used to push
    // the expansion through composed quantities). Value parts must stay off
    // the zero section.
    Jet f2_apply(std::span<const double> x, std::span<const Jet> y) const;

    FundamentalData fundamental_data(std::span<const double> x, std::span<const double> y) const;
    EulerReport euler_identity_check(std::span<const double> x, std::span<const double> y) const;

  private:
    FinslerStructure() = default;

    MetricFamily family_ = MetricFamily::euclidean;
    int dim_ = 0;
    double eps_ = 0.0;
    Eigen::VectorXd drift_;
    bool has_chart_ = false;
    Eigen::MatrixXd chart_inv_;  // the map A^{-1} applied to both arguments

    template <class S>
    S eval(std::span<const double> x, std::span<const S> y) const;
};

// Symmetric positive-definite inverse with a condition guard: throws
// DegenerateMetricError when the smallest eigenvalue is non-positive or the
// spectral condition number exceeds 1e12.
Eigen::MatrixXd guarded_spd_inverse(const Eigen::MatrixXd& m, const char* what);

}  // namespace bigtan
