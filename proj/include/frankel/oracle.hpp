#pragma once

// Monte Carlo estimate of the Dirichlet solution as the probability that the
// diffusion dX = -X dt + sqrt(2) dW reaches sigma2 before sigma1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/core.hpp"
#include "frankel/domain.hpp"

namespace frankel {

/// Philox4x32-10 counter-based generator.
class Philox {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Block generate(Block ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += 0x9E3779B9u;
                key[1] += 0xBB67AE85u;
            }
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }
};

/// Standard normals for one path: stream (seed, path), counter = block index.
class NormalStream {
public:
    NormalStream(std::uint64_t seed, std::uint64_t path)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          path_lo_(static_cast<std::uint32_t>(path)), path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

    double next() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

private:
    void refill() {
        const auto r = Philox::generate(
            {static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), path_lo_, path_hi_}, key_);
        ++block_;
        constexpr double scale = 1.0 / 4294967296.0;
        for (int i = 0; i < 2; ++i) {
            const double u1 = (r[2 * i] + 0.5) * scale, u2 = (r[2 * i + 1] + 0.5) * scale;
            const double rho = std::sqrt(-2.0 * std::log(u1)), th = 2.0 * std::numbers::pi * u2;
            buf_[2 * i] = rho * std::cos(th);
            buf_[2 * i + 1] = rho * std::sin(th);
        }
        pos_ = 0;
    }

    Philox::Key key_;
    std::uint32_t path_lo_, path_hi_;
    std::uint64_t block_ = 0;
    std::array<double, 4> buf_{};
    int pos_ = 4;
};

struct McConfig {
    std::size_t n_paths = 100000;
    double dt = 1e-3;
    std::uint64_t seed = 12345;
    double max_time = 50.0;
    /// Hit band around each piece; unset means 0.5826 sqrt(2 dt).
    std::optional<double> boundary_snap{};
    unsigned threads = 0;  ///< 0 uses the hardware concurrency
    bool trace = false;

    double snap() const { return boundary_snap ? *boundary_snap : 0.5826 * std::sqrt(2.0 * dt); }

    void validate() const {
        if (n_paths < 100) throw ParameterError("mc: n_paths must be at least 100");
        if (!(dt > 0.0) || dt > 1e-2) throw ParameterError("mc: dt must lie in (0, 1e-2]");
        if (!(max_time > 0.0)) throw ParameterError("mc: max_time must be positive");
        if (!(snap() >= 0.1 * std::sqrt(dt)))
            throw ParameterError("mc: boundary_snap below 0.1 sqrt(dt) leaves an uncontrolled crossing bias");
    }
};

struct PathRecord {
    std::size_t path = 0;
    double exit_time = 0.0;
    int exit_label = 0;  ///< 1 or 2 for the piece hit, 0 when truncated
};

struct McEstimate {
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::size_t hits_sigma1 = 0;
    std::size_t hits_sigma2 = 0;
    std::size_t truncated = 0;
    double mean_exit_time = 0.0;  ///< over paths that hit a piece
    bool truncation_warning = false;  ///< more than 10% of paths truncated
    double boundary_snap = 0.0;
    std::vector<PathRecord> trace;

    std::size_t n_effective() const { return hits_sigma1 + hits_sigma2; }

    void write_trace_csv(std::ostream& os) const {
        os.precision(17);
        os << "path,exit_time,exit_label\n";
        for (const auto& r : trace) os << r.path << ',' << r.exit_time << ',' << r.exit_label << '\n';
    }
};

inline void to_json(nlohmann::json& j, const McEstimate& e) {
    j = {{"p_hat", e.p_hat},
         {"stderr", e.stderr_},
         {"hits_sigma1", e.hits_sigma1},
         {"hits_sigma2", e.hits_sigma2},
         {"truncated", e.truncated},
         {"mean_exit_time", e.mean_exit_time},
         {"truncation_warning", e.truncation_warning},
         {"boundary_snap", e.boundary_snap}};
}

namespace detail {

inline PathRecord run_path(const Point& x0, const DomainSpec& d, const McConfig& cfg, std::size_t i, double snap) {
    NormalStream rng(cfg.seed, i);
    Point x = x0;
    const double sdt = std::sqrt(2.0 * cfg.dt), decay = 1.0 - cfg.dt;
    const auto max_steps = static_cast<std::uint64_t>(std::ceil(cfg.max_time / cfg.dt));
    const bool has1 = !d.sigma1.empty(), has2 = !d.sigma2.empty();
    for (std::uint64_t k = 1; k <= max_steps; ++k) {
        for (double& v : x) v = decay * v + sdt * rng.next();
        const double l1 = has1 ? d.sigma1(x) : 1.0, l2 = has2 ? d.sigma2(x) : 1.0;
        if (l1 <= snap || l2 <= snap) {
            // Both bands at once: the nearer piece wins.
            const int label = (l2 <= snap && (l1 > snap || l2 < l1)) ? 2 : 1;
            return {i, static_cast<double>(k) * cfg.dt, label};
        }
    }
    return {i, cfg.max_time, 0};
}

}  // namespace detail

/// Hitting probability of sigma2 before sigma1 from x0. Paths are processed
/// in fixed chunks; chunk sums are combined in chunk order, so results do not
/// depend on the thread count.
inline McEstimate ou_hitting_probability(const Point& x0, const DomainSpec& domain, const McConfig& cfg = {}) {
    cfg.validate();
    if (x0.size() != domain.dim) throw ParameterError("mc: x0 dimension does not match the domain");
    if (!domain.inside(x0)) throw ParameterError("mc: x0 is not inside the domain");
    const double snap = cfg.snap();
    constexpr std::size_t chunk = 1024;
    const std::size_t chunks = (cfg.n_paths + chunk - 1) / chunk;
    struct Partial {
        std::size_t h1 = 0, h2 = 0, trunc = 0;
        double time = 0.0;
    };
    std::vector<Partial> parts(chunks);
    std::vector<PathRecord> trace(cfg.trace ? cfg.n_paths : 0);
    unsigned nt = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    nt = static_cast<unsigned>(std::min<std::size_t>(nt, chunks));
    auto work = [&](unsigned t) {
        for (std::size_t c = t; c < chunks; c += nt) {
            Partial& p = parts[c];
            const std::size_t end = std::min(cfg.n_paths, (c + 1) * chunk);
            for (std::size_t i = c * chunk; i < end; ++i) {
                const auto r = detail::run_path(x0, domain, cfg, i, snap);
                if (r.exit_label == 1) ++p.h1;
                if (r.exit_label == 2) ++p.h2;
                if (r.exit_label == 0) ++p.trunc;
                else p.time += r.exit_time;
                if (cfg.trace) trace[i] = r;
            }
        }
    };
    if (nt <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < nt; ++t) pool.emplace_back(work, t);
    }
    McEstimate est;
    double time = 0.0;
    for (const auto& p : parts) {
        est.hits_sigma1 += p.h1;
        est.hits_sigma2 += p.h2;
        est.truncated += p.trunc;
        time += p.time;
    }
    est.boundary_snap = snap;
    const std::size_t n = est.n_effective();
    if (n > 0) {
        est.p_hat = static_cast<double>(est.hits_sigma2) / static_cast<double>(n);
        est.stderr_ = std::sqrt(est.p_hat * (1.0 - est.p_hat) / static_cast<double>(n));
        est.mean_exit_time = time / static_cast<double>(n);
    }
    est.truncation_warning = est.truncated * 10 > cfg.n_paths;
    est.trace = std::move(trace);
    return est;
}

}  // namespace frankel
