#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "bigtan/errors.hpp"

namespace bigtan {

// Shared descriptor for a truncated multivariate Taylor algebra: a fixed
// number of variables and a truncation order. Coefficients of a Jet are
// indexed by the graded monomial basis (degree 0 first, then degree 1, ...;
// within a degree, exponent tuples in lexicographic order with variable 0
// most significant). The layout of degrees <= k is identical for every
// context of the same variable count, so truncation is a prefix operation.
//
// Contexts are interned: two contexts with equal (num_vars, max_order)
// share one immutable table set, and equality is pointer equality.
class JetContext {
  public:
    // num_vars in 1..16, max_order in 1..4. Orders above 4 are not needed:
    // the deepest consumer takes four fiber derivatives of a scalar.
    JetContext(int num_vars, int max_order);

    int num_vars() const;
    int max_order() const;
    int monomial_count() const;

    // Same variables, lower (or equal) truncation order. new_order may be 0;
    // an order-0 context holds bare values and shows up only transiently at
    // the bottom of derivative chains.
    JetContext truncated(int new_order) const;

    // Exponent tuple of monomial `idx`, length num_vars().
    std::span<const std::uint8_t> exponents(int idx) const;
    int degree(int idx) const;
    // Product of factorials of the exponents of monomial `idx`.
    double factorial(int idx) const;
    // Index of the monomial with the given exponents, -1 if it exceeds the
    // truncation order. `multi` must have num_vars() entries.
    int index_of(std::span<const int> multi) const;

    bool operator==(const JetContext& other) const { return impl_ == other.impl_; }
    bool operator!=(const JetContext& other) const { return impl_ != other.impl_; }

    struct Impl;
    const Impl& impl() const { return *impl_; }

  private:
    explicit JetContext(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

// Dense truncated Taylor expansion of a scalar quantity. Coefficients are
// Taylor coefficients (partial derivative divided by the multi-index
// factorial); `partial` rescales on the way out.
//
// Arithmetic requires operands over the same variable count; mixed
// truncation orders are allowed and the result is truncated to the smaller
// order, which is exactly the order to which the product or quotient is
// trustworthy.
class Jet {
  public:
    static Jet constant(const JetContext& ctx, double value);
    // The affine jet value + epsilon_index; index in 0..num_vars-1.
    static Jet variable(const JetContext& ctx, int index, double value);
    // Adopt a raw coefficient vector laid out in ctx's graded basis.
    static Jet from_coefficients(const JetContext& ctx, std::vector<double> coeffs);

    const JetContext& context() const { return ctx_; }
    int order() const { return ctx_.max_order(); }

    double value() const { return coeffs_[0]; }
    double coeff(int idx) const;
    std::span<const double> coeffs() const { return coeffs_; }

    // True partial derivative for the exponent tuple `multi` (coefficient
    // times multi-index factorial). Throws ArgumentError past the order.
    double partial(std::span<const int> multi) const;

    // Jet of d(this)/d(var), one order lower. Exact: the derivative of a
    // degree-k truncation is the degree-(k-1) truncation of the derivative.
    Jet derivative(int var) const;

    // Truncate to a lower order (prefix of the coefficient vector).
    Jet truncated(int new_order) const;

    Jet operator-() const;

    friend Jet operator+(const Jet& a, const Jet& b);
    friend Jet operator-(const Jet& a, const Jet& b);
    friend Jet operator*(const Jet& a, const Jet& b);
    // c = a/b by the order-by-order recurrence b0*c_g = a_g - sum b_i c_j
    // over splits with deg i >= 1; exact to the truncation order.
    // Throws SingularityError when b.value() == 0.
    friend Jet operator/(const Jet& a, const Jet& b);

    friend Jet operator+(const Jet& a, double s);
    friend Jet operator+(double s, const Jet& a);
    friend Jet operator-(const Jet& a, double s);
    friend Jet operator-(double s, const Jet& a);
    friend Jet operator*(const Jet& a, double s);
    friend Jet operator*(double s, const Jet& a);
    friend Jet operator/(const Jet& a, double s);
    friend Jet operator/(double s, const Jet& a);

    Jet& operator+=(const Jet& other);
    Jet& operator-=(const Jet& other);

    // c = sqrt(a): c0 = sqrt(a0), then 2*c0*c_g = a_g - sum c_i c_j over
    // interior splits. Throws SingularityError when a.value() <= 0.
    friend Jet sqrt(const Jet& a);

  private:
    Jet(JetContext ctx, std::vector<double> coeffs)
        : ctx_(std::move(ctx)), coeffs_(std::move(coeffs)) {}

    JetContext ctx_;
    std::vector<double> coeffs_;
};

// Evaluate the polynomial carried by `poly` at args[v] = (value of variable
// v). Every variable of poly's context must get one argument jet; the
// arguments live in a common context (the result's context); in practice
// they are increments around poly's expansion point. Plain polynomial
// evaluation in jet arithmetic: the result order is the smallest argument
// order, and its coefficients up to poly's own order are the exact
// composition coefficients whenever the argument value parts vanish.
Jet substitute(const Jet& poly, std::span<const Jet> args);

}  // namespace bigtan
