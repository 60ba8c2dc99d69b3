#include "bigtan/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <utility>

#include "bigtan/seeding.hpp"

namespace bigtan {

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Value, lowered covector and fundamental tensor at one fiber point, read
// off an order-2 expansion.
struct LoweredEval {
    double f2;
    Eigen::VectorXd lower;  // 1/2 dF^2/dy
    Eigen::MatrixXd g;      // 1/2 d^2F^2/dy dy
};

LoweredEval eval_lowered(const FinslerStructure& s, std::span<const double> x,
                         const Eigen::VectorXd& y) {
    const int n = s.dim();
    const Jet jet = s.f2_jet(x, as_span(y), JetContext(n, 2));
    LoweredEval out{jet.value(), Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
    std::vector<int> multi(n, 0);
    for (int i = 0; i < n; ++i) {
        multi[i] = 1;
        out.lower[i] = 0.5 * jet.partial(multi);
        for (int j = i; j < n; ++j) {
            multi[j] += 1;
            out.g(i, j) = out.g(j, i) = 0.5 * jet.partial(multi);
            multi[j] -= 1;
        }
        multi[i] = 0;
    }
    return out;
}

// One damped-Newton run from a fixed start. Counts every residual
// evaluation into `evals`. Returns false when the line search stalls, the
// Jacobian factorization degrades, or the iteration budget runs out.
bool newton_run(const FinslerStructure& s, const NewtonSettings& cfg, std::span<const double> x,
                const Eigen::VectorXd& p, Eigen::VectorXd y, int& evals, Eigen::VectorXd& y_out,
                double& residual_out) {
    LoweredEval cur;
    try {
        cur = eval_lowered(s, x, y);
        ++evals;
    } catch (const Error&) {
        return false;
    }
    double res = (cur.lower - p).lpNorm<Eigen::Infinity>();

    for (int it = 0; it <= cfg.max_iterations; ++it) {
        if (res <= cfg.tolerance) {
            y_out = y;
            residual_out = res;
            return true;
        }
        if (it == cfg.max_iterations) break;

        Eigen::LDLT<Eigen::MatrixXd> fac(cur.g);
        if (fac.info() != Eigen::Success) return false;
        const Eigen::VectorXd step = fac.solve(cur.lower - p);
        if (!step.allFinite()) return false;

        bool accepted = false;
        for (double t = 1.0; t >= 1.0 / 1024.0; t *= 0.5) {
            const Eigen::VectorXd y_try = y - t * step;
            LoweredEval trial;
            try {
                trial = eval_lowered(s, x, y_try);
                ++evals;
            } catch (const Error&) {
                continue;  // walked off the admissible cone, shorten the step
            }
            const double res_try = (trial.lower - p).lpNorm<Eigen::Infinity>();
            if (res_try < res) {
                y = y_try;
                cur = std::move(trial);
                res = res_try;
                accepted = true;
                break;
            }
        }
        if (!accepted) return false;
    }
    return false;
}

}  // namespace

Eigen::VectorXd legendre_forward(const FinslerStructure& s, std::span<const double> x,
                                 std::span<const double> y) {
    const int n = s.dim();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n) {
        throw ArgumentError("legendre_forward: argument dimensions must match the structure");
    }
    const Jet jet = s.f2_jet(x, y, JetContext(n, 1));
    Eigen::VectorXd p(n);
    std::vector<int> multi(n, 0);
    for (int i = 0; i < n; ++i) {
        multi[i] = 1;
        p[i] = 0.5 * jet.partial(multi);
        multi[i] = 0;
    }
    return p;
}

CartanDual::CartanDual(FinslerStructure base, NewtonSettings solver)
    : base_(std::move(base)), solver_(solver) {
    if (solver_.tolerance <= 0.0 || solver_.max_iterations < 1 || solver_.jet_refinements < 1 ||
        solver_.random_restarts < 0) {
        throw ArgumentError("CartanDual: solver settings out of range");
    }
}

LegendreSolution CartanDual::invert(std::span<const double> x, std::span<const double> p) const {
    const int n = dim();
    if (static_cast<int>(x.size()) != n || static_cast<int>(p.size()) != n) {
        throw ArgumentError("invert: argument dimensions must match the structure");
    }
    const Eigen::VectorXd pv = Eigen::Map<const Eigen::VectorXd>(p.data(), n);
    if (pv.lpNorm<Eigen::Infinity>() < 1e-14) {
        throw ZeroSectionError("invert: p lies on the excluded zero section");
    }

    // Seed: raise p by the identity, then apply the inverse fundamental
    // tensor at that direction. Exact whenever the norm is quadratic.
    Eigen::VectorXd y0;
    try {
        const LoweredEval at_p = eval_lowered(base_, x, pv);
        y0 = at_p.g.ldlt().solve(pv);
        if (!y0.allFinite() || y0.lpNorm<Eigen::Infinity>() < 1e-14) y0 = pv;
    } catch (const Error&) {
        y0 = pv;
    }

    int evals = 0;
    Eigen::VectorXd y_sol;
    double res_sol = 0.0;
    if (newton_run(base_, solver_, x, pv, y0, evals, y_sol, res_sol)) {
        return {std::move(y_sol), evals, res_sol, 0};
    }

    // Deterministic restarts: directions on the sphere, radii scaled by |p|.
    // The stream is a pure function of (x, p), so a failure replays exactly.
    const std::uint64_t tag = fnv1a(p.data(), p.size() * sizeof(double),
                                    fnv1a(x.data(), x.size() * sizeof(double)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int k = 1; k <= solver_.random_restarts; ++k) {
        SplitMix64 rng{mix_seed(tag, static_cast<std::uint64_t>(k))};
        Eigen::VectorXd dir(n);
        do {
            for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
        } while (dir.norm() < 1e-8);
        const double radius = pv.norm() * (0.5 + 1.5 * rng.uniform01());
        if (newton_run(base_, solver_, x, pv, radius * dir.normalized(), evals, y_sol, res_sol)) {
            return {std::move(y_sol), evals, res_sol, k};
        }
    }

    std::ostringstream msg;
    msg << "invert: Newton stalled after " << solver_.random_restarts
        << " restarts (tolerance " << solver_.tolerance << ", " << evals
        << " residual evaluations)";
    throw SolverError(msg.str());
}

double CartanDual::k2(std::span<const double> x, std::span<const double> p) const {
    const LegendreSolution sol = invert(x, p);
    return base_.f2(x, as_span(sol.y_of_p));
}

DualJetResult CartanDual::k2_jet(std::span<const double> x, std::span<const double> p,
                                 const JetContext& ctx, int p_offset) const {
    const int n = dim();
    if (p_offset < 0 || p_offset + n > ctx.num_vars()) {
        throw ArgumentError("k2_jet: p variables do not fit the context");
    }
    LegendreSolution sol = invert(x, p);

    // F^2 as an order-4 polynomial in the fiber increment around y(p).
    const JetContext yctx(n, 4);
    const Jet f2y = base_.f2_jet(x, as_span(sol.y_of_p), yctx);
    std::vector<Jet> ell;  // l_i = 1/2 dF^2/dy^i, degree-3 polynomials
    ell.reserve(n);
    for (int i = 0; i < n; ++i) ell.push_back(f2y.derivative(i) * 0.5);

    // Frozen Jacobian: the fundamental tensor at the converged point.
    Eigen::MatrixXd g0(n, n);
    {
        std::vector<int> multi(n, 0);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                multi[i] += 1;
                multi[j] += 1;
                g0(i, j) = g0(j, i) = 0.5 * f2y.partial(multi);
                multi[i] -= 1;
                multi[j] -= 1;
            }
        }
    }
    const Eigen::MatrixXd g0_inv =
        guarded_spd_inverse(g0, "fundamental tensor at the dual preimage");

    std::vector<Jet> pj;
    pj.reserve(n);
    for (int i = 0; i < n; ++i) pj.push_back(Jet::variable(ctx, p_offset + i, p[i]));

    // delta = y(p) - y(p0) as jets. Each frozen-Jacobian pass multiplies
    // the error by a jet with vanishing value part, so the lowest wrong
    // degree climbs by one per pass: three passes make degrees <= 3 exact.
    std::vector<Jet> delta(n, Jet::constant(ctx, 0.0));
    for (int pass = 0; pass < solver_.jet_refinements; ++pass) {
        std::vector<Jet> resid;
        resid.reserve(n);
        for (int i = 0; i < n; ++i) resid.push_back(substitute(ell[i], delta) - pj[i]);
        for (int i = 0; i < n; ++i) {
            Jet upd = Jet::constant(ctx, 0.0);
            for (int j = 0; j < n; ++j) upd += g0_inv(i, j) * resid[j];
            delta[i] -= upd;
        }
    }

    const int report_degree = std::min(ctx.max_order(), 3);
    double defect = 0.0;
    for (int i = 0; i < n; ++i) {
        const Jet resid = substitute(ell[i], delta) - pj[i];
        for (int idx = 0; idx < ctx.monomial_count(); ++idx) {
            if (ctx.degree(idx) <= report_degree) {
                defect = std::max(defect, std::abs(resid.coeff(idx)));
            }
        }
    }

    Jet k2 = substitute(f2y, delta);

    std::vector<Jet> y_jets;
    y_jets.reserve(n);
    for (int i = 0; i < n; ++i) y_jets.push_back(delta[i] + sol.y_of_p[i]);

    if (ctx.max_order() >= 4) {
        // The composition cannot see the top-degree coefficients (they
        // would need delta one degree past the refinements), so rebuild
        // them from dK^2/dp_i = 2 y^i(p). Every i with a positive exponent
        // offers a route; the spread across routes is a consistency
        // diagnostic folded into jet_residual.
        std::vector<double> coeffs(k2.coeffs().begin(), k2.coeffs().end());
        std::vector<int> multi(ctx.num_vars(), 0);
        for (int idx = 0; idx < ctx.monomial_count(); ++idx) {
            if (ctx.degree(idx) != 4) continue;
            const auto alpha = ctx.exponents(idx);
            double acc = 0.0;
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            int routes = 0;
            for (int i = 0; i < n; ++i) {
                const int ai = alpha[p_offset + i];
                if (ai == 0) continue;
                for (int v = 0; v < ctx.num_vars(); ++v) multi[v] = alpha[v];
                multi[p_offset + i] -= 1;
                const double cand = 2.0 * y_jets[i].coeff(ctx.index_of(multi)) / ai;
                acc += cand;
                lo = std::min(lo, cand);
                hi = std::max(hi, cand);
                ++routes;
            }
            if (routes == 0) continue;  // monomial off the p block: composed value (zero) stands
            coeffs[idx] = acc / routes;
            defect = std::max(defect, hi - lo);
        }
        k2 = Jet::from_coefficients(ctx, std::move(coeffs));
    }

    return {std::move(k2), std::move(y_jets), std::move(sol), defect};
}

CartanData CartanDual::data(std::span<const double> x, std::span<const double> p) const {
    const int n = dim();
    DualJetResult jr = k2_jet(x, p, JetContext(n, 4), 0);

    CartanData out{jr.k2.value(), Eigen::VectorXd(n), Eigen::MatrixXd(n, n), Eigen::MatrixXd(),
                   Tensor3(n), std::move(jr.solve)};
    std::vector<int> multi(n, 0);
    for (int i = 0; i < n; ++i) {
        multi[i] = 1;
        out.p_upper[i] = 0.5 * jr.k2.partial(multi);
        for (int j = i; j < n; ++j) {
            multi[j] += 1;
            out.g_star(i, j) = out.g_star(j, i) = 0.5 * jr.k2.partial(multi);
            for (int k = j; k < n; ++k) {
                multi[k] += 1;
                const double c = -0.25 * jr.k2.partial(multi);
                out.cartan(i, j, k) = out.cartan(i, k, j) = out.cartan(j, i, k) = c;
                out.cartan(j, k, i) = out.cartan(k, i, j) = out.cartan(k, j, i) = c;
                multi[k] -= 1;
            }
            multi[j] -= 1;
        }
        multi[i] = 0;
    }
    out.g_star_inv = guarded_spd_inverse(out.g_star, "dual fundamental tensor");
    return out;
}

}  // namespace bigtan
