#include "bigtan/jets.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace bigtan {

namespace {

// 4 bits per variable is plenty: exponents never exceed the order cap (4).
std::uint64_t pack_exponents(std::span<const std::uint8_t> exps) {
    std::uint64_t key = 0;
    for (std::size_t v = 0; v < exps.size(); ++v) {
        key |= static_cast<std::uint64_t>(exps[v]) << (4 * v);
    }
    return key;
}

}  // namespace

struct JetContext::Impl {
    int num_vars = 0;
    int max_order = 0;
    int count = 0;

    std::vector<std::uint8_t> exps;   // count x num_vars, row-major
    std::vector<int> deg;             // per monomial
    std::vector<double> fact;         // multi-index factorial per monomial
    std::unordered_map<std::uint64_t, std::int32_t> index_map;

    // All unordered pairs i <= j with deg(i) + deg(j) <= max_order, plus the
    // product index. Drives multiplication.
    struct Triple {
        std::int32_t i, j, k;
    };
    std::vector<Triple> triples;

    // The same pairs grouped by product index, ordered pairs this time.
    // Drives the division and square-root recurrences.
    struct Pair {
        std::int32_t i, j;
    };
    std::vector<Pair> conv_pairs;
    std::vector<std::int32_t> conv_begin;  // count + 1 offsets into conv_pairs

    // times_var[v * count + k] = index of monomial_k + e_v, or -1 when that
    // would exceed max_order.
    std::vector<std::int32_t> times_var;

    std::span<const std::uint8_t> exponents(int idx) const {
        return {exps.data() + static_cast<std::size_t>(idx) * num_vars,
                static_cast<std::size_t>(num_vars)};
    }
};

namespace {

void enumerate_monomials(int num_vars, int max_order, JetContext::Impl& impl) {
    std::vector<std::uint8_t> current(num_vars, 0);
    // Fill variable `v` onward with total degree `remaining`, emitting tuples
    // with variable 0 most significant, largest exponent first.
    auto gen = [&](auto&& self, int remaining, int v) -> void {
        if (v == num_vars - 1) {
            current[v] = static_cast<std::uint8_t>(remaining);
            impl.exps.insert(impl.exps.end(), current.begin(), current.end());
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            current[v] = static_cast<std::uint8_t>(e);
            self(self, remaining - e, v + 1);
        }
    };
    for (int d = 0; d <= max_order; ++d) {
        gen(gen, d, 0);
    }
    impl.count = static_cast<int>(impl.exps.size()) / num_vars;
}

std::shared_ptr<const JetContext::Impl> build_impl(int num_vars, int max_order) {
    auto impl = std::make_shared<JetContext::Impl>();
    impl->num_vars = num_vars;
    impl->max_order = max_order;
    enumerate_monomials(num_vars, max_order, *impl);

    const int count = impl->count;
    impl->deg.resize(count);
    impl->fact.resize(count);
    impl->index_map.reserve(count * 2);
    for (int k = 0; k < count; ++k) {
        auto e = impl->exponents(k);
        int d = 0;
        double f = 1.0;
        for (int v = 0; v < num_vars; ++v) {
            d += e[v];
            for (int m = 2; m <= e[v]; ++m) f *= m;
        }
        impl->deg[k] = d;
        impl->fact[k] = f;
        impl->index_map.emplace(pack_exponents(e), k);
    }

    impl->times_var.assign(static_cast<std::size_t>(num_vars) * count, -1);
    for (int k = 0; k < count; ++k) {
        const std::uint64_t key = pack_exponents(impl->exponents(k));
        for (int v = 0; v < num_vars; ++v) {
            if (impl->deg[k] + 1 > max_order) continue;
            auto it = impl->index_map.find(key + (std::uint64_t{1} << (4 * v)));
            if (it != impl->index_map.end()) {
                impl->times_var[static_cast<std::size_t>(v) * count + k] = it->second;
            }
        }
    }

    std::vector<std::vector<JetContext::Impl::Pair>> groups(count);
    std::vector<int> scratch(num_vars);
    for (int i = 0; i < count; ++i) {
        for (int j = i; j < count; ++j) {
            if (impl->deg[i] + impl->deg[j] > max_order) continue;
            auto ei = impl->exponents(i);
            auto ej = impl->exponents(j);
            std::uint64_t key = 0;
            for (int v = 0; v < num_vars; ++v) {
                key |= static_cast<std::uint64_t>(ei[v] + ej[v]) << (4 * v);
            }
            const int k = impl->index_map.at(key);
            impl->triples.push_back({i, j, k});
            groups[k].push_back({i, j});
            if (i != j) groups[k].push_back({j, i});
        }
    }
    impl->conv_begin.resize(count + 1);
    for (int k = 0; k < count; ++k) {
        impl->conv_begin[k] = static_cast<std::int32_t>(impl->conv_pairs.size());
        impl->conv_pairs.insert(impl->conv_pairs.end(), groups[k].begin(), groups[k].end());
    }
    impl->conv_begin[count] = static_cast<std::int32_t>(impl->conv_pairs.size());
    return impl;
}

std::shared_ptr<const JetContext::Impl> acquire_impl(int num_vars, int max_order) {
    static std::mutex mutex;
    static std::map<std::pair<int, int>, std::shared_ptr<const JetContext::Impl>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[{num_vars, max_order}];
    if (!slot) slot = build_impl(num_vars, max_order);
    return slot;
}

}  // namespace

JetContext::JetContext(int num_vars, int max_order) {
    if (num_vars < 1 || num_vars > 16) {
        throw ArgumentError("JetContext: num_vars must be in 1..16, got " +
                            std::to_string(num_vars));
    }
    if (max_order < 1 || max_order > 4) {
        throw ArgumentError("JetContext: max_order must be in 1..4, got " +
                            std::to_string(max_order));
    }
    impl_ = acquire_impl(num_vars, max_order);
}

int JetContext::num_vars() const { return impl_->num_vars; }
int JetContext::max_order() const { return impl_->max_order; }
int JetContext::monomial_count() const { return impl_->count; }

JetContext JetContext::truncated(int new_order) const {
    if (new_order < 0 || new_order > impl_->max_order) {
        throw ArgumentError("JetContext::truncated: bad order " + std::to_string(new_order));
    }
    if (new_order == impl_->max_order) return *this;
    return JetContext(acquire_impl(impl_->num_vars, new_order));
}

std::span<const std::uint8_t> JetContext::exponents(int idx) const {
    if (idx < 0 || idx >= impl_->count) {
        throw ArgumentError("JetContext::exponents: index out of range");
    }
    return impl_->exponents(idx);
}

int JetContext::degree(int idx) const {
    if (idx < 0 || idx >= impl_->count) {
        throw ArgumentError("JetContext::degree: index out of range");
    }
    return impl_->deg[idx];
}

double JetContext::factorial(int idx) const {
    if (idx < 0 || idx >= impl_->count) {
        throw ArgumentError("JetContext::factorial: index out of range");
    }
    return impl_->fact[idx];
}

int JetContext::index_of(std::span<const int> multi) const {
    if (static_cast<int>(multi.size()) != impl_->num_vars) {
        throw ArgumentError("JetContext::index_of: wrong tuple length");
    }
    std::uint64_t key = 0;
    for (int v = 0; v < impl_->num_vars; ++v) {
        if (multi[v] < 0) throw ArgumentError("JetContext::index_of: negative exponent");
        if (multi[v] > impl_->max_order) return -1;
        key |= static_cast<std::uint64_t>(multi[v]) << (4 * v);
    }
    auto it = impl_->index_map.find(key);
    return it == impl_->index_map.end() ? -1 : it->second;
}

Jet Jet::constant(const JetContext& ctx, double value) {
    std::vector<double> c(ctx.monomial_count(), 0.0);
    c[0] = value;
    return Jet(ctx, std::move(c));
}

Jet Jet::variable(const JetContext& ctx, int index, double value) {
    if (index < 0 || index >= ctx.num_vars()) {
        throw ArgumentError("Jet::variable: index out of range");
    }
    if (ctx.max_order() < 1) {
        throw ArgumentError("Jet::variable: order-0 context has no variables");
    }
    std::vector<double> c(ctx.monomial_count(), 0.0);
    c[0] = value;
    c[1 + index] = 1.0;  // degree-1 block lists e_0, e_1, ... in order
    return Jet(ctx, std::move(c));
}

Jet Jet::from_coefficients(const JetContext& ctx, std::vector<double> coeffs) {
    if (static_cast<int>(coeffs.size()) != ctx.monomial_count()) {
        throw ArgumentError("Jet::from_coefficients: expected one coefficient per monomial");
    }
    return Jet(ctx, std::move(coeffs));
}

double Jet::coeff(int idx) const {
    if (idx < 0 || idx >= static_cast<int>(coeffs_.size())) {
        throw ArgumentError("Jet::coeff: index out of range");
    }
    return coeffs_[idx];
}

double Jet::partial(std::span<const int> multi) const {
    int total = 0;
    for (int e : multi) total += e;
    if (total > order()) {
        throw ArgumentError("Jet::partial: requested order exceeds truncation order");
    }
    const int idx = ctx_.index_of(multi);
    if (idx < 0) throw ArgumentError("Jet::partial: no such monomial");
    return coeffs_[idx] * ctx_.factorial(idx);
}

Jet Jet::derivative(int var) const {
    if (var < 0 || var >= ctx_.num_vars()) {
        throw ArgumentError("Jet::derivative: variable out of range");
    }
    if (order() < 1) {
        throw ArgumentError("Jet::derivative: jet is order 0");
    }
    JetContext out_ctx = ctx_.truncated(order() - 1);
    std::vector<double> out(out_ctx.monomial_count(), 0.0);
    const auto& impl = ctx_.impl();
    const int count = out_ctx.monomial_count();
    for (int k = 0; k < count; ++k) {
        // Shared graded layout: monomial k means the same tuple in both
        // contexts, so lift through the source context's shift table.
        const std::int32_t up = impl.times_var[static_cast<std::size_t>(var) * impl.count + k];
        if (up >= 0) {
            out[k] = coeffs_[up] * (impl.exponents(k)[var] + 1);
        }
    }
    return Jet(out_ctx, std::move(out));
}

Jet Jet::truncated(int new_order) const {
    if (new_order == order()) return *this;
    JetContext out_ctx = ctx_.truncated(new_order);
    std::vector<double> out(coeffs_.begin(), coeffs_.begin() + out_ctx.monomial_count());
    return Jet(out_ctx, std::move(out));
}

Jet Jet::operator-() const {
    Jet r = *this;
    for (double& c : r.coeffs_) c = -c;
    return r;
}

namespace {

// Align two operands on a common context: same variable count required,
// orders reconciled to the smaller one.
std::pair<Jet, Jet> aligned(const Jet& a, const Jet& b) {
    if (a.context().num_vars() != b.context().num_vars()) {
        throw ArgumentError("jet arithmetic: operands use different variable counts");
    }
    if (a.context() == b.context()) return {a, b};
    const int m = std::min(a.order(), b.order());
    return {a.truncated(m), b.truncated(m)};
}

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
    auto [x, y] = aligned(a, b);
    std::vector<double> out(x.coeffs().begin(), x.coeffs().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += y.coeffs()[i];
    return Jet(x.context(), std::move(out));
}

Jet operator-(const Jet& a, const Jet& b) {
    auto [x, y] = aligned(a, b);
    std::vector<double> out(x.coeffs().begin(), x.coeffs().end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y.coeffs()[i];
    return Jet(x.context(), std::move(out));
}

Jet operator*(const Jet& a, const Jet& b) {
    auto [x, y] = aligned(a, b);
    const auto& impl = x.context().impl();
    std::vector<double> out(impl.count, 0.0);
    const double* pa = x.coeffs().data();
    const double* pb = y.coeffs().data();
    for (const auto& t : impl.triples) {
        out[t.k] += pa[t.i] * pb[t.j];
        if (t.i != t.j) out[t.k] += pa[t.j] * pb[t.i];
    }
    return Jet(x.context(), std::move(out));
}

Jet operator/(const Jet& a, const Jet& b) {
    auto [x, y] = aligned(a, b);
    const double b0 = y.value();
    if (b0 == 0.0) {
        throw SingularityError("jet division: divisor value part is zero");
    }
    const auto& impl = x.context().impl();
    std::vector<double> out(impl.count, 0.0);
    const double* pa = x.coeffs().data();
    const double* pb = y.coeffs().data();
    for (int k = 0; k < impl.count; ++k) {
        double acc = pa[k];
        for (std::int32_t s = impl.conv_begin[k]; s < impl.conv_begin[k + 1]; ++s) {
            const auto& p = impl.conv_pairs[s];
            if (p.i == 0) continue;  // the b0 * c_k term being solved for
            acc -= pb[p.i] * out[p.j];
        }
        out[k] = acc / b0;
    }
    return Jet(x.context(), std::move(out));
}

Jet operator+(const Jet& a, double s) {
    Jet r = a;
    r.coeffs_[0] += s;
    return r;
}
Jet operator+(double s, const Jet& a) { return a + s; }
Jet operator-(const Jet& a, double s) { return a + (-s); }
Jet operator-(double s, const Jet& a) { return (-a) + s; }

Jet operator*(const Jet& a, double s) {
    Jet r = a;
    for (double& c : r.coeffs_) c *= s;
    return r;
}
Jet operator*(double s, const Jet& a) { return a * s; }
Jet operator/(const Jet& a, double s) {
    if (s == 0.0) throw SingularityError("jet division: scalar divisor is zero");
    return a * (1.0 / s);
}
Jet operator/(double s, const Jet& a) { return Jet::constant(a.context(), s) / a; }

Jet& Jet::operator+=(const Jet& other) {
    *this = *this + other;
    return *this;
}
Jet& Jet::operator-=(const Jet& other) {
    *this = *this - other;
    return *this;
}

Jet sqrt(const Jet& a) {
    const double a0 = a.value();
    if (!(a0 > 0.0)) {
        throw SingularityError("jet sqrt: value part is not positive");
    }
    const auto& impl = a.context().impl();
    std::vector<double> out(impl.count, 0.0);
    out[0] = std::sqrt(a0);
    const double* pa = a.coeffs().data();
    const double inv2c0 = 1.0 / (2.0 * out[0]);
    for (int k = 1; k < impl.count; ++k) {
        double acc = pa[k];
        for (std::int32_t s = impl.conv_begin[k]; s < impl.conv_begin[k + 1]; ++s) {
            const auto& p = impl.conv_pairs[s];
            if (p.i == 0 || p.j == 0) continue;  // 2*c0*c_k terms being solved for
            acc -= out[p.i] * out[p.j];
        }
        out[k] = acc * inv2c0;
    }
    return Jet(a.context(), std::move(out));
}

Jet substitute(const Jet& poly, std::span<const Jet> args) {
    const int nv = poly.context().num_vars();
    if (static_cast<int>(args.size()) != nv) {
        throw ArgumentError("substitute: need one argument per polynomial variable");
    }
    // Reconcile argument contexts.
    int target_order = args[0].order();
    for (const Jet& a : args) {
        if (a.context().num_vars() != args[0].context().num_vars()) {
            throw ArgumentError("substitute: arguments use different variable counts");
        }
        target_order = std::min(target_order, a.order());
    }
    JetContext out_ctx = args[0].context().truncated(target_order);

    // Cached powers args[v]^e, built on demand.
    std::vector<std::vector<Jet>> powers(nv);
    auto power = [&](int v, int e) -> const Jet& {
        auto& cache = powers[v];
        if (cache.empty()) cache.push_back(Jet::constant(out_ctx, 1.0));
        while (static_cast<int>(cache.size()) <= e) {
            cache.push_back(cache.back() * args[v].truncated(target_order));
        }
        return cache[e];
    };

    Jet acc = Jet::constant(out_ctx, poly.value());
    const auto& impl = poly.context().impl();
    for (int k = 1; k < impl.count; ++k) {
        const double c = poly.coeffs()[k];
        if (c == 0.0) continue;
        auto e = impl.exponents(k);
        int v0 = -1;
        for (int v = 0; v < nv; ++v) {
            if (e[v] > 0) {
                v0 = v;
                break;
            }
        }
        Jet term = power(v0, e[v0]);
        for (int v = v0 + 1; v < nv; ++v) {
            if (e[v] > 0) term = term * power(v, e[v]);
        }
        acc += term * c;
    }
    return acc;
}

}  // namespace bigtan
