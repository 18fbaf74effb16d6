#pragma once

// Exterior-sphere barrier with its boundary gradient estimate, Lipschitz
// competitors between two boundary pieces, and finite-sample separation
// checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/core.hpp"
#include "frankel/domain.hpp"
#include "frankel/fields.hpp"
#include "frankel/geometry.hpp"
#include "frankel/quadrature.hpp"

namespace frankel {

struct BarrierParams {
    double R = 1.0;       ///< exterior sphere radius
    double a = 1.0;       ///< shell width
    int m = 2;            ///< hypersurface dimension
    double z_norm = 0.0;  ///< |z| at the tangency point

    void validate() const {
        if (!(R > 0.0)) throw ParameterError("barrier: R must be positive");
        if (!(a > 0.0)) throw ParameterError("barrier: a must be positive");
        if (m < 1) throw ParameterError("barrier: m must be at least 1");
        if (!(z_norm >= 0.0) || !std::isfinite(z_norm)) throw ParameterError("barrier: |z| must be finite and >= 0");
    }
};

inline void to_json(nlohmann::json& j, const BarrierParams& p) {
    j = {{"R", p.R}, {"a", p.a}, {"m", p.m}, {"z_norm", p.z_norm}};
}

/// (R+a)^m / (R^m a) * e^{a|z|}
inline double rough_bound(const BarrierParams& p) {
    return std::pow((p.R + p.a) / p.R, p.m) / p.a * std::exp(p.a * p.z_norm);
}

/// Boundary gradient bound ((R+1)^m/R^m) e^{|z|} / a with a = min(1, dist).
inline double estimate_gradient(double z_norm, double R, double dist_to_sigma1, int m) {
    if (!(R > 0.0)) throw ParameterError("estimate_gradient: R must be positive");
    if (!(dist_to_sigma1 > 0.0)) throw ParameterError("estimate_gradient: distance must be positive");
    return std::pow((R + 1.0) / R, m) * std::exp(z_norm) / std::min(1.0, dist_to_sigma1);
}

inline double estimate_gradient(const Point& z, double R, double dist_to_sigma1, int m) {
    return estimate_gradient(norm(z), R, dist_to_sigma1, m);
}

/// psi(d) = int_0^d w / int_0^a w with w(t) = e^{t^2/2} (t+R)^{-m} e^{-|z| t}.
struct BarrierResult {
    BarrierParams params;
    double integral = 0.0;  ///< int_0^a w
    double psi_prime_0 = 0.0;
    double rough_bound = 0.0;
    double gradient_estimate = 0.0;
    double quad_tol = 1e-10;

    double weight(double t) const {
        return std::exp(0.5 * t * t - params.z_norm * t) / std::pow(t + params.R, params.m);
    }
    double psi(double d) const {
        if (d == params.a) return 1.0;
        return quad::adaptive_simpson([this](double t) { return weight(t); }, 0.0, d, {quad_tol}) / integral;
    }
    double psi_prime(double d) const { return weight(d) / integral; }
    double psi_second(double d) const {
        return psi_prime(d) * (d - params.m / (d + params.R) - params.z_norm);
    }
};

inline void to_json(nlohmann::json& j, const BarrierResult& r) {
    j = {{"params", r.params},
         {"integral", r.integral},
         {"psi_prime_0", r.psi_prime_0},
         {"rough_bound", r.rough_bound},
         {"gradient_estimate", r.gradient_estimate},
         {"quad_tol", r.quad_tol}};
}

inline BarrierResult build_psi(const BarrierParams& params, double quad_tol = 1e-10) {
    params.validate();
    if (!(quad_tol > 0.0)) throw ParameterError("barrier: quad_tol must be positive");
    BarrierResult r;
    r.params = params;
    r.quad_tol = quad_tol;
    r.integral = quad::adaptive_simpson([&r](double t) { return r.weight(t); }, 0.0, params.a, {quad_tol});
    r.psi_prime_0 = 1.0 / (std::pow(params.R, params.m) * r.integral);
    r.rough_bound = rough_bound(params);
    r.gradient_estimate = estimate_gradient(params.z_norm, params.R, params.a, params.m);
    return r;
}

struct SupersolutionOptions {
    double fd_step = 1e-5;
    double quad_tol = 1e-10;
    bool linear_control = false;  ///< use psi = d/a instead of the barrier profile
};

struct SupersolutionResult {
    double max_violation = 0.0;  ///< largest positive Delta_f(psi o d) found
    double min_value = 0.0;      ///< most negative value found
    std::size_t evaluated = 0;
    bool vacuous = false;  ///< no samples were taken
};

inline void to_json(nlohmann::json& j, const SupersolutionResult& r) {
    j = {{"max_violation", r.max_violation},
         {"min_value", r.min_value},
         {"evaluated", r.evaluated},
         {"vacuous", r.vacuous}};
}

namespace detail {

/// Quasi-random point of the shell R < |x - y| < R + a in R^n.
inline Point shell_point(std::size_t k, std::size_t n, const Point& y, double R, double a) {
    const std::size_t pairs = (n + 1) / 2;
    const auto h = halton(k + 1, 1 + 2 * pairs);
    Point g(n);
    for (std::size_t i = 0; i < pairs; ++i) {
        const double rho = std::sqrt(-2.0 * std::log(h[1 + 2 * i]));
        const double th = 2.0 * std::numbers::pi * h[2 + 2 * i];
        g[2 * i] = rho * std::cos(th);
        if (2 * i + 1 < n) g[2 * i + 1] = rho * std::sin(th);
    }
    return y + (R + a * h[0]) * normalized(g);
}

}  // namespace detail

/// Max of Delta_f(psi(d(x))) over quasi-random points of the shell
/// R < |x - y| < R + a, with y = (R + |z|) e_1 so that z = |z| e_1 is the
/// tangency point. Each point p is evaluated on the relative field
/// psi(d(x)) - psi(d(p)), integrated over the short interval between the two
/// distances, which keeps the second differences free of cancellation.
inline SupersolutionResult supersolution_check(const BarrierParams& params, std::size_t samples,
                                               const SupersolutionOptions& opt = {}) {
    params.validate();
    SupersolutionResult res;
    if (samples == 0) {
        res.vacuous = true;
        return res;
    }
    const auto bar = build_psi(params, opt.quad_tol);
    const std::size_t n = static_cast<std::size_t>(params.m) + 1;
    const Point y = (params.R + params.z_norm) * unit_vector(n, 0);
    res.max_violation = 0.0;
    res.min_value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < samples; ++k) {
        const Point p = detail::shell_point(k, n, y, params.R, params.a);
        const double rp = norm(p - y), dp = rp - params.R;
        const ScalarField rel([&](const Point& x) {
            const double delta = dot(x - p, x + p - 2.0 * y) / (norm(x - y) + rp);
            if (opt.linear_control) return delta / params.a;
            return quad::gauss_legendre([&](double t) { return bar.weight(t); }, dp, dp + delta, 1) / bar.integral;
        });
        const double v = weighted_laplacian(rel, p, opt.fd_step);
        res.max_violation = std::max(res.max_violation, v);
        res.min_value = std::min(res.min_value, v);
        ++res.evaluated;
    }
    return res;
}

//---------------------------------------------------------------------------//
// Lipschitz competitors

enum class LipschitzMode { positive_distance, projection };

inline std::string to_string(LipschitzMode m) {
    return m == LipschitzMode::positive_distance ? "positive-distance" : "projection";
}

inline LipschitzMode lipschitz_mode_from_string(const std::string& s) {
    if (s == "positive-distance") return LipschitzMode::positive_distance;
    if (s == "projection") return LipschitzMode::projection;
    throw ParameterError("unknown barrier mode '" + s + "'");
}

namespace detail {

inline double clamp01(double t) {
    if (t >= 1.0) return 1.0;
    if (t > 0.0) return t;
    return 0.0;  // also catches NaN
}

inline void require_distances(const DomainSpec& d) {
    for (const Boundary* b : {&d.sigma1, &d.sigma2}) {
        if (b->empty()) throw ParameterError("Lipschitz barrier needs both boundary pieces");
        if (!b->level_is_distance)
            throw MissingQuantityError("boundary piece '" + b->name + "' has no pointwise distance");
    }
}

}  // namespace detail

/// inf of dist(z, sigma1) over surface nodes z of sigma2 inside the exhaustion ball.
inline double measured_separation(const DomainSpec& d) {
    detail::require_distances(d);
    if (!d.sigma2.surface_rule) throw MissingQuantityError("sigma2 has no surface sampling");
    const double R = d.exhaustion_radius;
    double best = std::numeric_limits<double>::infinity();
    bool pos = false, neg = false;
    for (const auto& node : d.sigma2.surface_rule(R / 64.0, R)) {
        const double l = d.sigma1(node.x);
        pos = pos || l > 0.0;
        neg = neg || l < 0.0;
        best = std::min(best, std::abs(l));
    }
    if (pos && neg) return 0.0;  // the pieces cross
    if (!std::isfinite(best)) throw ParameterError("sigma2 has no samples inside the exhaustion ball");
    return best;
}

/// Competitor with value 0 on sigma1 and 1 on sigma2.
///  positive-distance: clamp((d1 - d2 + D) / (2D)), D the measured separation;
///  projection:        clamp(d1(z) / d2(P1(z))), P1 the nearest-point map of sigma1.
inline ScalarField lipschitz_barrier(LipschitzMode mode, const DomainSpec& d) {
    detail::require_distances(d);
    const Boundary s1 = d.sigma1, s2 = d.sigma2;
    // Points within this distance of a piece take its value exactly.
    auto on = [](const Boundary& b, const Point& x) { return b.distance(x) <= 1e-12 * (1.0 + norm(x)); };
    if (mode == LipschitzMode::positive_distance) {
        const double D = measured_separation(d);
        if (!(D > 0.0))
            throw ParameterError("boundary pieces are not a positive distance apart (measured " + std::to_string(D) + ")");
        return ScalarField([s1, s2, D, on](const Point& x) {
            if (on(s1, x)) return 0.0;
            if (on(s2, x)) return 1.0;
            return detail::clamp01((s1.distance(x) - s2.distance(x) + D) / (2.0 * D));
        });
    }
    if (!s1.projection) throw MissingQuantityError("sigma1 has no nearest-point projection");
    return ScalarField([s1, s2, on](const Point& x) {
        if (on(s1, x)) return 0.0;
        if (on(s2, x)) return 1.0;
        return detail::clamp01(s1.distance(x) / s2.distance(s1.projection(x)));
    });
}

/// Largest difference quotient |f(x) - f(x')| / |x - x'| over quasi-random
/// pairs inside Omega cap B_R at separation `step`.
inline double measured_lipschitz(const ScalarField& f, const DomainSpec& d, std::size_t samples = 4000,
                                 double step = 1e-4) {
    const std::size_t n = d.dim;
    const double R = d.exhaustion_radius;
    double best = 0.0;
    for (std::size_t k = 1; k <= samples; ++k) {
        const auto h = halton(k, 2 * n);
        Point x(n), e(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = (2.0 * h[i] - 1.0) * R;
            e[i] = 2.0 * h[n + i] - 1.0;
        }
        if (norm(e) < 1e-6) continue;
        const Point x2 = x + step * normalized(e);
        if (norm(x) > R || !d.inside(x) || !d.inside(x2)) continue;
        best = std::max(best, std::abs(f(x2) - f(x)) / step);
    }
    return best;
}

//---------------------------------------------------------------------------//
// Separation hypothesis

struct SeparationHypothesis {
    double b = 0.0;                 ///< Gaussian decay rate, in [0, 1/2)
    std::vector<double> poly_P{1};  ///< ascending coefficients of P
    std::optional<double> c{};      ///< tube-width decay rate
    std::vector<double> poly_Q{1};
    bool variational_b_bound = false;  ///< require b < 1/4
    int m = 2;                         ///< hypersurface dimension

    void validate() const {
        if (!(b >= 0.0 && b < 0.5)) throw ParameterError("separation: b must lie in [0, 1/2)");
        if (variational_b_bound && !(b < 0.25)) throw ParameterError("separation: the variational regime needs b < 1/4");
        if (poly_P.empty()) throw ParameterError("separation: P needs at least one coefficient");
        if (c) {
            if (!(*c > 0.0)) throw ParameterError("separation: c must be positive");
            if (!(m * *c + b < 0.5)) throw ParameterError("separation: m c + b must be below 1/2");
        }
    }

    static double poly(const std::vector<double>& coef, double t) {
        double v = 0.0;
        for (auto it = coef.rbegin(); it != coef.rend(); ++it) v = v * t + *it;
        return v;
    }
};

struct SeparationEntry {
    double z_norm = 0.0;
    double ratio = 0.0;  ///< min over sampled directions of dist e^{b|z|^2} P(|z|)
    bool truncated = false;  ///< sigma2 has no point at this norm
};

struct SeparationResult {
    std::vector<SeparationEntry> ratios;
    bool passes = false;
    std::string note = "finite-sample heuristic, not a liminf";
};

inline void to_json(nlohmann::json& j, const SeparationResult& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : r.ratios) rows.push_back({{"z_norm", e.z_norm}, {"ratio", e.ratio}, {"truncated", e.truncated}});
    j = {{"ratios", rows}, {"passes", r.passes}, {"note", r.note}};
}

inline SeparationResult separation_check(const SeparationHypothesis& hyp, const Boundary& sigma1,
                                         const Boundary& sigma2, const std::vector<double>& sample_norms,
                                         std::size_t directions = 16) {
    hyp.validate();
    if (sample_norms.empty()) throw ParameterError("separation: no sample norms");
    for (std::size_t i = 1; i < sample_norms.size(); ++i)
        if (!(sample_norms[i] > sample_norms[i - 1])) throw ParameterError("separation: sample norms must increase");
    if (!sigma1.level_is_distance) throw MissingQuantityError("sigma1 has no pointwise distance");
    if (!sigma2.sample_at_norm) throw MissingQuantityError("sigma2 cannot be sampled at prescribed norms");
    SeparationResult res;
    for (double rho : sample_norms) {
        SeparationEntry e;
        e.z_norm = rho;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < directions; ++j) {
            const auto z = sigma2.sample_at_norm(rho, j);
            if (z) best = std::min(best, sigma1.distance(*z));
        }
        if (std::isfinite(best))
            e.ratio = best * std::exp(hyp.b * rho * rho) * SeparationHypothesis::poly(hyp.poly_P, rho);
        else
            e.truncated = true;
        res.ratios.push_back(e);
    }
    // Minimum over the top half of the sampled norms.
    double tail = std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    for (std::size_t i = sample_norms.size() / 2; i < res.ratios.size(); ++i)
        if (!res.ratios[i].truncated) {
            tail = std::min(tail, res.ratios[i].ratio);
            ++used;
        }
    res.passes = used > 0 && tail > 1e-6;
    return res;
}

//---------------------------------------------------------------------------//
// Parameter sweeps

struct SweepRow {
    BarrierResult barrier;
    bool monotone = false;
    bool bound_holds = false;
    double max_violation = 0.0;
};

inline void to_json(nlohmann::json& j, const SweepRow& r) {
    j = {{"barrier", r.barrier},
         {"monotone", r.monotone},
         {"bound_holds", r.bound_holds},
         {"max_violation", r.max_violation}};
}

/// psi strictly increasing on a uniform sample of [0, a].
inline bool psi_monotone(const BarrierResult& r, std::size_t points = 64) {
    double prev = r.psi(0.0);
    for (std::size_t i = 1; i <= points; ++i) {
        const double v = r.psi(r.params.a * static_cast<double>(i) / static_cast<double>(points));
        if (!(v > prev) || !(r.psi_prime(r.params.a * static_cast<double>(i) / static_cast<double>(points)) > 0.0))
            return false;
        prev = v;
    }
    return r.psi_prime(0.0) > 0.0;
}

/// Cartesian sweep over {"R": [...], "a": [...], "m": [...], "z_norm": [...]},
/// with optional "samples" and "quad_tol".
inline std::vector<SweepRow> barrier_sweep(const nlohmann::json& spec) {
    auto list = [&](const char* key, std::vector<double> def) {
        return spec.contains(key) ? spec.at(key).get<std::vector<double>>() : def;
    };
    const auto Rs = list("R", {0.5, 1, 2}), as = list("a", {0.5, 1, 2}), ms = list("m", {1, 2, 3}),
               zs = list("z_norm", {0, 1, 5});
    const std::size_t samples = spec.value("samples", std::size_t{200});
    const double tol = spec.value("quad_tol", 1e-10);
    std::vector<SweepRow> rows;
    for (double R : Rs)
        for (double a : as)
            for (double m : ms)
                for (double z : zs) {
                    if (m != std::floor(m)) throw ParameterError("sweep: m must be an integer");
                    SweepRow row;
                    row.barrier = build_psi({R, a, static_cast<int>(m), z}, tol);
                    row.monotone = psi_monotone(row.barrier);
                    row.bound_holds = row.barrier.psi_prime_0 <= row.barrier.rough_bound;
                    row.max_violation = supersolution_check(row.barrier.params, samples, {.quad_tol = tol}).max_violation;
                    rows.push_back(row);
                }
    return rows;
}

}  // namespace frankel
