#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "bigtan/finsler.hpp"

namespace bigtan {

// Controls for the fiberwise dual solve.
struct NewtonSettings {
    double tolerance = 1e-12;  // infinity-norm target for l(x, y) - p
    int max_iterations = 50;   // outer Newton steps per start
    int jet_refinements = 3;   // frozen-Jacobian passes for the jet-level solve
    int random_restarts = 10;  // deterministic fallback starts when the seed stalls
};

// Outcome of one inverse solve on a fiber.
struct LegendreSolution {
    Eigen::VectorXd y_of_p;  // the fiber vector with l(x, y) = p
    int iterations = 0;      // residual evaluations spent (1 when the seed already solves)
    double residual = 0.0;   // final infinity norm of l(x, y) - p
    int restarts_used = 0;   // 0 when the analytic seed converged
};

// Lowering map p_i = 1/2 dF^2/dy^i at (x, y).
Eigen::VectorXd legendre_forward(const FinslerStructure& s, std::span<const double> x,
                                 std::span<const double> y);

// Expansion of the dual squared norm around one cotangent point.
struct DualJetResult {
    Jet k2;                   // K^2(x, .) in the p variables
    std::vector<Jet> y_of_p;  // y^i(p), exact through degree min(order, 3)
    LegendreSolution solve;   // the value-level solve underneath
    // Largest coefficient defect of l(y(p)) - p through degree 3 after the
    // final refinement pass, combined with the spread between alternative
    // recovery routes for the top-degree coefficients. Small means the
    // jet-level solve is converged, not merely the value-level one.
    double jet_residual = 0.0;
};

// Pointwise dual data at (x, p):
//   p^i     =  1/2 dK^2/dp_i      (the raised covector; equals y^i(p))
//   g*^{ij} =  1/2 d^2K^2/dp_i dp_j
//   cartan  = -1/4 d^3K^2/dp_i dp_j dp_k
struct CartanData {
    double K2;
    Eigen::VectorXd p_upper;
    Eigen::MatrixXd g_star;
    Eigen::MatrixXd g_star_inv;
    Tensor3 cartan;
    LegendreSolution solve;
};

// The dual norm K(x, p) = F(x, y(p)), with y(p) inverting the lowering map
// on the fiber. Fibers of the lowering map are convex, so damped Newton
// with the fundamental tensor as its exact Jacobian finds the unique
// preimage; Taylor data of K^2 comes from re-running Newton in jet
// arithmetic around the converged point.
class CartanDual {
  public:
    explicit CartanDual(FinslerStructure base, NewtonSettings solver = {});

    const FinslerStructure& base() const { return base_; }
    const NewtonSettings& solver() const { return solver_; }
    int dim() const { return base_.dim(); }

    // Solve l(x, y) = p for y. Throws ZeroSectionError for p = 0 and
    // SolverError when every start stalls; restarts are deterministic in
    // (x, p), so failures reproduce.
    LegendreSolution invert(std::span<const double> x, std::span<const double> p) const;

    double k2(std::span<const double> x, std::span<const double> p) const;

    // Expand K^2 and y(p) with p_i seeded as context variable (p_offset + i).
    // The value-level solution is polished by a fixed number of Newton
    // passes in jet arithmetic with the Jacobian frozen at the converged
    // point; each pass gains at least one exact degree. Coefficients
    // through degree 3 come from composing K^2 = F^2(y(p)); degree-4
    // coefficients, when the context holds them, are recovered from the
    // gradient identity dK^2/dp_i = 2 y^i, which the composition cannot
    // reach at that degree.
    DualJetResult k2_jet(std::span<const double> x, std::span<const double> p,
                         const JetContext& ctx, int p_offset = 0) const;

    // Pointwise dual data, extracted from an order-4 expansion at (x, p).
    CartanData data(std::span<const double> x, std::span<const double> p) const;

  private:
    FinslerStructure base_;
    NewtonSettings solver_;
};

inline LegendreSolution legendre_inverse(const CartanDual& d, std::span<const double> x,
                                         std::span<const double> p) {
    return d.invert(x, p);
}

inline CartanData cartan_data(const CartanDual& d, std::span<const double> x,
                              std::span<const double> p) {
    return d.data(x, p);
}

}  // namespace bigtan
