#pragma once

// Drift-Laplacian Dirichlet/Neumann solves: closed-form one-dimensional
// profiles and a finite-difference solver on the lattice h*Z^n.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "frankel/core.hpp"
#include "frankel/domain.hpp"
#include "frankel/fields.hpp"
#include "frankel/linalg.hpp"
#include "frankel/quadrature.hpp"

namespace frankel {

//---------------------------------------------------------------------------//
// One-dimensional reductions

/// u(s) = int_lo^s w / int_lo^hi w with w(t) = e^{t^2/2} (slab) or
/// t^{1-n} e^{t^2/2} (radial). Integrals are accumulated on a table of
/// Gauss-Legendre panels, so u(lo) = 0 and u(hi) = 1 exactly.
class Profile {
public:
    enum class Kind { slab, radial };

    static Profile slab(double h1, double h2, std::size_t dim) {
        if (!(h1 < h2)) throw ParameterError("slab needs h1 < h2");
        if (dim < 1) throw ParameterError("slab dimension must be positive");
        return Profile(Kind::slab, h1, h2, dim);
    }

    static Profile radial(double a, double b, std::size_t dim) {
        if (!(a > 0.0)) throw ParameterError("radial reduction needs a > 0 (the drift term is singular at the origin)");
        if (!(a < b)) throw ParameterError("radial reduction needs a < b (empty annulus)");
        if (dim < 2) throw ParameterError("radial reduction needs ambient dimension >= 2");
        return Profile(Kind::radial, a, b, dim);
    }

    Kind kind() const noexcept { return kind_; }
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }
    std::size_t dim() const noexcept { return dim_; }
    /// Normalizer int_lo^hi w.
    double normalizer() const noexcept { return cum_.back(); }

    double weight(double t) const {
        const double g = std::exp(0.5 * t * t);
        return kind_ == Kind::slab ? g : std::pow(t, 1.0 - static_cast<double>(dim_)) * g;
    }

    double u(double s) const {
        if (s <= lo_) return 0.0;
        if (s >= hi_) return 1.0;
        const auto k = std::min(static_cast<std::size_t>((s - lo_) / step_), cum_.size() - 2);
        const double t0 = lo_ + static_cast<double>(k) * step_;
        const double part = quad::gauss_legendre([this](double t) { return weight(t); }, t0, s, 1);
        return (cum_[k] + part) / cum_.back();
    }

    /// du/ds; zero outside [lo, hi].
    double du(double s) const { return (s < lo_ || s > hi_) ? 0.0 : weight(s) / cum_.back(); }

    /// Coordinate of x the profile depends on: x_n for a slab, |x| otherwise.
    double coordinate(const Point& x) const { return kind_ == Kind::slab ? x.back() : norm(x); }

    double value(const Point& x) const { return u(coordinate(x)); }

    Point gradient(const Point& x) const {
        if (kind_ == Kind::slab) {
            Point g(x.size(), 0.0);
            g.back() = du(x.back());
            return g;
        }
        const double r = norm(x);
        if (r == 0.0) return Point(x.size(), 0.0);
        return (du(r) / r) * x;
    }

    /// Half the weighted Dirichlet energy over the whole region; the slab
    /// includes the Gaussian mass (2 pi)^{(n-1)/2} of the tangential directions.
    double energy() const {
        const double Z = normalizer();
        if (kind_ == Kind::slab) return 0.5 * std::pow(2.0 * std::numbers::pi, 0.5 * (static_cast<double>(dim_) - 1.0)) / Z;
        return 0.5 * unit_sphere_area(static_cast<int>(dim_)) / Z;
    }

    /// int over the region cap B_R of |grad u|^2 dv_f (not halved).
    double energy_in_ball(double R) const {
        const double Z = normalizer();
        auto w = [this](double t) { return weight(t); };
        if (kind_ == Kind::slab) {
            const double a = std::max(lo_, -R), b = std::min(hi_, R);
            if (a >= b) return 0.0;
            const int n1 = static_cast<int>(dim_) - 1;
            // |grad u|^2 e^{-f} = e^{s^2/2}/Z^2 times the tangential Gaussian.
            auto g = [&](double s) { return w(s) / (Z * Z) * quad::gaussian_ball_mass(n1, std::sqrt(std::max(0.0, R * R - s * s))); };
            return quad::gauss_legendre(g, a, b, 64);
        }
        const double b = std::min(hi_, R);
        if (b <= lo_) return 0.0;
        const double area = unit_sphere_area(static_cast<int>(dim_));
        return area * quad::gauss_legendre(w, lo_, b, 64) / (Z * Z);
    }

    /// (s, u(s)) at `samples` equally spaced points of [lo, hi].
    std::vector<std::pair<double, double>> table(std::size_t samples) const {
        if (samples < 2) throw ParameterError("profile table needs at least two samples");
        std::vector<std::pair<double, double>> out;
        for (std::size_t i = 0; i < samples; ++i) {
            const double s = i + 1 == samples ? hi_ : lo_ + (hi_ - lo_) * static_cast<double>(i) / static_cast<double>(samples - 1);
            out.emplace_back(s, u(s));
        }
        return out;
    }

private:
    Profile(Kind k, double lo, double hi, std::size_t dim) : kind_(k), lo_(lo), hi_(hi), dim_(dim) {
        const auto panels = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil((hi - lo) / 0.01)));
        step_ = (hi - lo) / static_cast<double>(panels);
        cum_.assign(panels + 1, 0.0);
        auto w = [this](double t) { return weight(t); };
        for (std::size_t k = 0; k < panels; ++k) {
            const double a = lo + static_cast<double>(k) * step_;
            const double b = k + 1 == panels ? hi : lo + static_cast<double>(k + 1) * step_;
            cum_[k + 1] = cum_[k] + quad::gauss_legendre(w, a, b, 1);
        }
    }

    Kind kind_;
    double lo_, hi_;
    std::size_t dim_;
    double step_ = 0.0;
    std::vector<double> cum_;
};

//---------------------------------------------------------------------------//
// Lattice discretization of Omega_k

enum class NodeKind : std::uint8_t { interior, dirichlet0, dirichlet1, neumann_gamma, exterior };

inline std::string to_string(NodeKind k) {
    switch (k) {
        case NodeKind::interior: return "interior";
        case NodeKind::dirichlet0: return "dirichlet0";
        case NodeKind::dirichlet1: return "dirichlet1";
        case NodeKind::neumann_gamma: return "neumann_gamma";
        case NodeKind::exterior: return "exterior";
    }
    return "?";
}

/// Cubic lattice {j h : |j_i| <= N} covering D_k with a two-node margin.
/// Nodes sit at exact multiples of h, so grids for nested radii share nodes.
class Grid {
public:
    Grid(DomainSpec domain, double h) : domain_(std::move(domain)), h_(h) {
        if (!(h > 0.0)) throw ParameterError("grid spacing must be positive");
        if (domain_.sigma1.empty() && domain_.sigma2.empty()) throw ParameterError("domain has no boundary pieces");
        const double R = domain_.exhaustion_radius;
        if (!(R > 0.0)) throw ParameterError("exhaustion radius must be positive");
        n_ = domain_.dim;
        half_ = static_cast<long>(std::ceil(R / h)) + 2;
        side_ = static_cast<std::size_t>(2 * half_ + 1);
        std::size_t total = 1;
        for (std::size_t d = 0; d < n_; ++d) {
            if (total > (std::size_t{1} << 34) / side_) throw ParameterError("grid too large");
            total *= side_;
        }
        kind_.assign(total, NodeKind::exterior);
        // Row-major like GridField: the last axis varies fastest.
        stride_.assign(n_, 1);
        for (std::size_t d = n_ - 1; d-- > 0;) stride_[d] = stride_[d + 1] * side_;
        classify();
    }

    const DomainSpec& domain() const noexcept { return domain_; }
    double h() const noexcept { return h_; }
    std::size_t dim() const noexcept { return n_; }
    long half_width() const noexcept { return half_; }
    std::size_t side() const noexcept { return side_; }
    std::size_t size() const noexcept { return kind_.size(); }
    NodeKind kind(std::size_t f) const { return kind_[f]; }
    const std::vector<NodeKind>& kinds() const noexcept { return kind_; }
    std::size_t stride(std::size_t axis) const { return stride_[axis]; }

    long index(std::size_t f, std::size_t axis) const {
        return static_cast<long>((f / stride_[axis]) % side_) - half_;
    }

    Point node(std::size_t f) const {
        Point p(n_);
        for (std::size_t d = 0; d < n_; ++d) p[d] = static_cast<double>(index(f, d)) * h_;
        return p;
    }

    /// Flat index of lattice point j (coordinates j*h), if inside the box.
    std::optional<std::size_t> flat(const std::vector<long>& j) const {
        std::size_t f = 0;
        for (std::size_t d = 0; d < n_; ++d) {
            if (j[d] < -half_ || j[d] > half_) return std::nullopt;
            f += static_cast<std::size_t>(j[d] + half_) * stride_[d];
        }
        return f;
    }

    /// Neighbor along +-axis, if inside the box.
    std::optional<std::size_t> neighbor(std::size_t f, std::size_t axis, int dir) const {
        const long i = index(f, axis) + dir;
        if (i < -half_ || i > half_) return std::nullopt;
        return dir > 0 ? f + stride_[axis] : f - stride_[axis];
    }

    std::size_t count(NodeKind k) const { return static_cast<std::size_t>(std::count(kind_.begin(), kind_.end(), k)); }

    /// Empty field with this grid's geometry.
    GridField make_field(double fill = 0.0) const {
        GridField g(std::vector<std::size_t>(n_, side_), std::vector<double>(n_, h_),
                    Point(n_, -static_cast<double>(half_) * h_));
        for (std::size_t f = 0; f < g.size(); ++f) g[f] = fill;
        return g;
    }

private:
    void classify() {
        const double R2 = domain_.exhaustion_radius * domain_.exhaustion_radius;
        std::vector<std::uint8_t> in_omega(kind_.size(), 0);
        for (std::size_t f = 0; f < kind_.size(); ++f) {
            const Point x = node(f);
            if (norm_sq(x) <= R2 && domain_.inside(x)) {
                kind_[f] = NodeKind::interior;
                in_omega[f] = 1;
            }
        }
        if (count(NodeKind::interior) == 0) throw ParameterError("Omega cap D_k contains no grid nodes");
        for (std::size_t f = 0; f < kind_.size(); ++f) {
            if (kind_[f] != NodeKind::interior) continue;
            for (std::size_t d = 0; d < n_; ++d)
                for (int dir : {-1, 1}) {
                    const auto g = neighbor(f, d, dir);
                    if (!g) throw ContractViolation("interior node on the grid box edge");
                    if (kind_[*g] != NodeKind::exterior) continue;
                    const Point y = node(*g);
                    const double l1 = domain_.sigma1(y), l2 = domain_.sigma2(y);
                    if (l1 <= 0.0 || l2 <= 0.0)
                        kind_[*g] = (l1 <= 0.0 && (l2 > 0.0 || l1 <= l2)) ? NodeKind::dirichlet0 : NodeKind::dirichlet1;
                    else
                        kind_[*g] = NodeKind::neumann_gamma;
                }
        }
    }

    DomainSpec domain_;
    double h_;
    std::size_t n_ = 0;
    long half_ = 0;
    std::size_t side_ = 0;
    std::vector<std::size_t> stride_;
    std::vector<NodeKind> kind_;
};

//---------------------------------------------------------------------------//
// Solutions and reports

struct SolveOptions {
    /// Stopping tolerance on the max-norm residual in operator units: each
    /// diagonally scaled row residual times the uniform diagonal 2n/h^2.
    double tol = 1e-8;
    std::size_t max_iter = 20000;
    double initial_guess = 0.0;    ///< constant starting value for the Krylov iteration
};

struct SolveReport {
    std::string backing = "grid";  ///< "grid", "profile" or "field"
    std::size_t iterations = 0;
    double linear_residual = 0.0;
    double tolerance = 0.0;
    std::vector<double> residual_history;
    std::vector<std::pair<double, double>> exhaustion_history;  ///< (R_k, sup change)
    bool converged = false;
    double h = 0.0;
    std::size_t unknowns = 0;
    std::size_t upwind_nodes = 0;
    std::size_t mixed_nodes = 0;  ///< nodes with both Dirichlet and Neumann arms
    double min_value = 0.0, max_value = 1.0;
};

inline void to_json(nlohmann::json& j, const SolveReport& r) {
    j = {{"backing", r.backing},
         {"iterations", r.iterations},
         {"linear_residual", r.linear_residual},
         {"tolerance", r.tolerance},
         {"converged", r.converged},
         {"h", r.h},
         {"unknowns", r.unknowns},
         {"upwind_nodes", r.upwind_nodes},
         {"mixed_nodes", r.mixed_nodes},
         {"min_value", r.min_value},
         {"max_value", r.max_value},
         {"residual_history", r.residual_history}};
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [R, d] : r.exhaustion_history) hist.push_back({{"R", R}, {"sup_change", d}});
    j["exhaustion_history"] = hist;
}

/// Grid-backed data. `field` holds the solution at interior nodes, the exact
/// data at Dirichlet nodes and mirrored values elsewhere; `extended` continues
/// the solution smoothly across the boundary for cut-cell quadrature.
struct GridSolution {
    std::shared_ptr<const Grid> grid;
    GridField field;
    GridField extended;
};

class Solution {
public:
    ScalarField field;
    SolveReport report;
    std::shared_ptr<const Profile> profile;
    std::shared_ptr<const GridSolution> grid;

    double operator()(const Point& x) const { return field(x); }
    bool is_grid() const noexcept { return static_cast<bool>(grid); }
    bool is_profile() const noexcept { return static_cast<bool>(profile); }
    const std::string& label() const { return label_; }

    /// Exact for profiles; gradient of the multilinear interpolant of the
    /// extended field on grids; central differences for plain fields.
    Point gradient(const Point& x) const {
        if (profile) return profile->gradient(x);
        if (grid) return grid->extended.interpolate_gradient(x);
        return frankel::gradient(field, x, 1e-5 * (1.0 + norm(x)));
    }

    /// Solution given directly by a scalar field (closed-form test fields).
    static Solution from_field(ScalarField f, std::string label) {
        Solution s;
        s.field = std::move(f);
        s.report.backing = "field";
        s.report.converged = true;
        s.label_ = std::move(label);
        return s;
    }

    static Solution from_profile(Profile p, std::string label) {
        Solution s;
        s.profile = std::make_shared<const Profile>(std::move(p));
        auto prof = s.profile;
        s.field = ScalarField([prof](const Point& x) { return prof->value(x); });
        s.report.backing = "profile";
        s.report.converged = true;
        s.label_ = std::move(label);
        return s;
    }

    static Solution from_grid(std::shared_ptr<const GridSolution> g, SolveReport report) {
        Solution s;
        s.grid = std::move(g);
        auto gs = s.grid;
        s.field = ScalarField([gs](const Point& x) { return gs->field.interpolate(x); });
        s.report = std::move(report);
        s.label_ = s.grid->grid->domain().label;
        return s;
    }

    /// Grid binary of the node values followed by nothing else; the report is
    /// written separately as JSON.
    void write_grid(std::ostream& os) const {
        if (!grid) throw ParameterError("solution is not grid-backed");
        grid->field.write_binary(os);
    }

private:
    std::string label_;
};

/// Closed-form radial solution on the annulus a < |x| < b in R^n.
inline Solution solve_radial(double a, double b, std::size_t n, std::size_t samples = 257) {
    Solution s = Solution::from_profile(Profile::radial(a, b, n), "annulus");
    (void)s.profile->table(samples);  // validates `samples`
    return s;
}

/// Closed-form slab solution between x_n = h1 and x_n = h2 in R^dim.
inline Solution solve_slab(double h1, double h2, std::size_t dim = 2) {
    return Solution::from_profile(Profile::slab(h1, h2, dim), "slab");
}

namespace detail {

struct Arm {
    enum Type { regular, dirichlet, neumann } type = regular;
    double theta = 1.0;  ///< fraction of h to the boundary crossing
    double value = 0.0;  ///< Dirichlet datum
    int piece = 0;       ///< 1 or 2 for Dirichlet arms
    std::size_t neighbor = 0;
};

inline double crossing_fraction(const Boundary& b, const Point& x, std::size_t axis, int dir, double h) {
    double lo = 0.0, hi = 1.0;
    Point p = x;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        p[axis] = x[axis] + dir * mid * h;
        (b(p) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline Arm analyze_arm(const Grid& g, std::size_t f, const Point& x, std::size_t axis, int dir) {
    Arm arm;
    arm.neighbor = *g.neighbor(f, axis, dir);
    if (g.kind(arm.neighbor) == NodeKind::interior) return arm;
    const DomainSpec& dom = g.domain();
    const Point y = g.node(arm.neighbor);
    const double h = g.h();
    double best = 2.0;
    const Boundary* pieces[2] = {&dom.sigma1, &dom.sigma2};
    for (int k = 0; k < 2; ++k) {
        const Boundary& b = *pieces[k];
        if (b.empty() || b(y) > 0.0) continue;
        const double t = crossing_fraction(b, x, axis, dir, h);
        if (t < best) {
            best = t;
            arm.type = Arm::dirichlet;
            arm.value = b.value;
            arm.piece = k + 1;
        }
    }
    const double R = dom.exhaustion_radius;
    if (norm_sq(y) > R * R) {
        const double rest = norm_sq(x) - x[axis] * x[axis];
        const double t = std::clamp((std::sqrt(std::max(0.0, R * R - rest)) - dir * x[axis]) / h, 0.0, 1.0);
        if (t < best) {
            best = t;
            arm.type = Arm::neumann;
        }
    }
    if (best > 1.0) throw ContractViolation("non-interior neighbor without a boundary crossing");
    arm.theta = std::max(best, 1e-8);
    return arm;
}

struct Assembly {
    SparseMatrix A;
    std::vector<double> rhs;
    std::vector<std::size_t> unknown_of;  ///< grid node -> unknown index (npos if none)
    std::vector<std::size_t> node_of;     ///< unknown -> grid node
    std::vector<std::vector<Arm>> arms;   ///< 2n arms per unknown: (axis, -), (axis, +)
    std::size_t upwind = 0, mixed = 0;
    bool any_dirichlet = false;
};

inline Assembly assemble(const Grid& g) {
    Assembly as;
    const std::size_t npos = static_cast<std::size_t>(-1);
    as.unknown_of.assign(g.size(), npos);
    for (std::size_t f = 0; f < g.size(); ++f)
        if (g.kind(f) == NodeKind::interior) {
            as.unknown_of[f] = as.node_of.size();
            as.node_of.push_back(f);
        }
    const std::size_t n = g.dim();
    const double h = g.h();
    as.arms.resize(as.node_of.size());
    std::vector<std::pair<std::size_t, double>> row;
    for (std::size_t k = 0; k < as.node_of.size(); ++k) {
        const std::size_t f = as.node_of[k];
        const Point x = g.node(f);
        const bool upwind = h * norm(x) > 2.0;
        if (upwind) ++as.upwind;
        double diag = 0.0, rhs = 0.0;
        row.clear();
        bool has_dir = false, has_neu = false, touches1 = false, touches2 = false;
        auto& arms = as.arms[k];
        for (std::size_t d = 0; d < n; ++d) {
            const Arm am = analyze_arm(g, f, x, d, -1), ap = analyze_arm(g, f, x, d, +1);
            arms.push_back(am);
            arms.push_back(ap);
            const double hm = am.type == Arm::dirichlet ? am.theta * h : h;
            const double hp = ap.type == Arm::dirichlet ? ap.theta * h : h;
            const double b = -x[d];
            double cp, cm;
            if (!upwind) {
                cp = (2.0 + b * hm) / (hp * (hm + hp));
                cm = (2.0 - b * hp) / (hm * (hm + hp));
            } else {
                cp = 2.0 / (hp * (hm + hp));
                cm = 2.0 / (hm * (hm + hp));
                if (b > 0.0) cp += b / hp;
                else cm += -b / hm;
            }
            diag -= cp + cm;
            for (const auto& [arm, c] : {std::pair{am, cm}, std::pair{ap, cp}}) {
                switch (arm.type) {
                    case Arm::regular: row.emplace_back(as.unknown_of[arm.neighbor], c); break;
                    case Arm::dirichlet:
                        rhs -= c * arm.value;
                        has_dir = true;
                        (arm.piece == 1 ? touches1 : touches2) = true;
                        break;
                    case Arm::neumann:
                        diag += c;
                        has_neu = true;
                        break;
                }
            }
        }
        if (touches1 && touches2)
            throw ParameterError("boundary pieces are closer than two grid cells near x = (" +
                                 std::to_string(x[0]) + ", ...); refine the grid");
        if (has_dir) as.any_dirichlet = true;
        if (has_dir && has_neu) ++as.mixed;
        // Negate so the diagonal is positive (M-matrix form).
        std::sort(row.begin(), row.end());
        bool diag_done = false;
        for (const auto& [c, v] : row) {
            if (!diag_done && c > k) {
                as.A.push(k, -diag);
                diag_done = true;
            }
            as.A.push(c, -v);
        }
        if (!diag_done) as.A.push(k, -diag);
        as.A.end_row();
        as.rhs.push_back(-rhs);
    }
    return as;
}

/// Fills the `field` and `extended` arrays from the interior solution.
inline void fill_outputs(const Grid& g, const Assembly& as, const std::vector<double>& u, GridSolution& out) {
    const std::size_t npos = static_cast<std::size_t>(-1);
    const DomainSpec& dom = g.domain();
    out.field = g.make_field();
    out.extended = g.make_field();
    std::vector<std::uint8_t> set_f(g.size(), 0), set_e(g.size(), 0);
    for (std::size_t k = 0; k < as.node_of.size(); ++k) {
        out.field[as.node_of[k]] = out.extended[as.node_of[k]] = u[k];
        set_f[as.node_of[k]] = set_e[as.node_of[k]] = 1;
    }
    // Field: exact data at Dirichlet nodes, mirrored values at Neumann nodes.
    std::vector<double> acc(g.size(), 0.0);
    std::vector<unsigned> cnt(g.size(), 0);
    for (std::size_t k = 0; k < as.node_of.size(); ++k)
        for (const auto& arm : as.arms[k])
            if (arm.type != Arm::regular) {
                acc[arm.neighbor] += u[k];
                ++cnt[arm.neighbor];
            }
    for (std::size_t f = 0; f < g.size(); ++f) {
        switch (g.kind(f)) {
            case NodeKind::dirichlet0: out.field[f] = dom.sigma1.value; set_f[f] = 1; break;
            case NodeKind::dirichlet1: out.field[f] = dom.sigma2.value; set_f[f] = 1; break;
            case NodeKind::neumann_gamma:
                out.field[f] = cnt[f] ? acc[f] / cnt[f] : 0.0;
                set_f[f] = 1;
                break;
            default: break;
        }
    }
    // Extension, first layer: linear continuation along each cut arm.
    std::vector<double> best_theta(g.size(), -1.0);
    const std::size_t n = g.dim();
    for (std::size_t k = 0; k < as.node_of.size(); ++k) {
        const std::size_t f = as.node_of[k];
        for (std::size_t a = 0; a < 2 * n; ++a) {
            const Arm& arm = as.arms[k][a];
            if (arm.type == Arm::regular) continue;
            const int dir = (a % 2 == 0) ? -1 : 1;
            const auto back = g.neighbor(f, a / 2, -dir);
            const std::size_t kb = back ? as.unknown_of[*back] : npos;
            double est, score;
            if (arm.type == Arm::dirichlet) {
                const double th = arm.theta, gval = arm.value;
                if (th >= 0.5 || kb == npos) est = gval + (gval - u[k]) * (1.0 - th) / th;
                else est = gval + (gval - u[kb]) * (1.0 - th) / (1.0 + th);
                score = 1.0 + th;
            } else {
                est = kb != npos ? 2.0 * u[k] - u[kb] : u[k];
                score = 0.5;
            }
            if (score > best_theta[arm.neighbor]) {
                best_theta[arm.neighbor] = score;
                out.extended[arm.neighbor] = est;
                set_e[arm.neighbor] = 1;
            }
        }
    }
    // Second layer: linear continuation from two set nodes in line.
    std::vector<std::size_t> layer;
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (set_e[f]) continue;
        double s = 0.0;
        int c = 0;
        for (std::size_t d = 0; d < n; ++d)
            for (int dir : {-1, 1}) {
                const auto a = g.neighbor(f, d, dir);
                if (!a || !set_e[*a]) continue;
                const auto b = g.neighbor(*a, d, dir);
                if (!b || !set_e[*b]) continue;
                s += 2.0 * out.extended[*a] - out.extended[*b];
                ++c;
            }
        if (c) {
            acc[f] = s / c;
            layer.push_back(f);
        }
    }
    for (std::size_t f : layer) {
        out.extended[f] = acc[f];
        set_e[f] = 1;
    }
    // Remaining nodes: nearest-value flood fill.
    auto flood = [&](GridField& field, std::vector<std::uint8_t>& set) {
        std::deque<std::size_t> q;
        for (std::size_t f = 0; f < g.size(); ++f)
            if (set[f]) q.push_back(f);
        while (!q.empty()) {
            const std::size_t f = q.front();
            q.pop_front();
            for (std::size_t d = 0; d < n; ++d)
                for (int dir : {-1, 1}) {
                    const auto nb = g.neighbor(f, d, dir);
                    if (nb && !set[*nb]) {
                        set[*nb] = 1;
                        field[*nb] = field[f];
                        q.push_back(*nb);
                    }
                }
        }
    };
    flood(out.field, set_f);
    flood(out.extended, set_e);
}

}  // namespace detail

/// Solves Delta_f u = 0 on Omega_k with the Dirichlet data of sigma1/sigma2
/// and a homogeneous Neumann condition on |x| = R_k.
inline Solution solve_mixed_bvp(std::shared_ptr<const Grid> grid, const SolveOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw ParameterError("solver tolerance must be positive");
    const Grid& g = *grid;
    detail::Assembly as = detail::assemble(g);
    if (!as.any_dirichlet)
        throw SingularSystemError(
            "no Dirichlet data reaches the grid: with Neumann data alone only constants solve the problem "
            "(the domain behaves as f-parabolic) and the linear system is singular");
    as.A.scale_rows(as.rhs);
    const std::vector<double> x0(as.node_of.size(), opt.initial_guess);
    const double unit = 2.0 * static_cast<double>(g.dim()) / (g.h() * g.h());
    auto kr = bicgstab(as.A, as.rhs, x0, opt.tol / unit, opt.max_iter);
    for (double& r : kr.history) r *= unit;
    kr.residual *= unit;
    if (!kr.converged)
        throw ConvergenceError("linear solve stopped at residual " + std::to_string(kr.residual) + " after " +
                                   std::to_string(kr.iterations) + " iterations",
                               kr.history);
    const DomainSpec& dom = g.domain();
    double dmin = 1.0, dmax = 0.0;
    for (const Boundary* b : {&dom.sigma1, &dom.sigma2})
        if (!b->empty()) {
            dmin = std::min(dmin, b->value);
            dmax = std::max(dmax, b->value);
        }
    SolveReport rep;
    rep.iterations = kr.iterations;
    rep.linear_residual = kr.residual;
    rep.tolerance = opt.tol;
    rep.residual_history = kr.history;
    rep.converged = true;
    rep.h = g.h();
    rep.unknowns = as.node_of.size();
    rep.upwind_nodes = as.upwind;
    rep.mixed_nodes = as.mixed;
    rep.min_value = *std::min_element(kr.x.begin(), kr.x.end());
    rep.max_value = *std::max_element(kr.x.begin(), kr.x.end());
    // Iteration error may step outside the data range by about tol; anything
    // larger is a genuine maximum-principle failure.
    const double slack = 1e3 * opt.tol;
    if (rep.min_value < dmin - slack || rep.max_value > dmax + slack)
        throw ContractViolation("discrete maximum principle violated: range [" + std::to_string(rep.min_value) + ", " +
                                std::to_string(rep.max_value) + "]");
    for (double& v : kr.x) v = std::clamp(v, dmin, dmax);
    auto out = std::make_shared<GridSolution>();
    out->grid = grid;
    detail::fill_outputs(g, as, kr.x, *out);
    return Solution::from_grid(std::move(out), std::move(rep));
}

inline Solution solve_mixed_bvp(const DomainSpec& domain, double h, const SolveOptions& opt = {}) {
    return solve_mixed_bvp(std::make_shared<const Grid>(domain, h), opt);
}

struct ExhaustionOptions {
    double tol = 1e-6;
    /// Radius of the common compact set on which successive solutions are
    /// compared; 0 means the first radius R_1.
    double compact_radius = 0.0;
    SolveOptions linear;
};

/// Solves on Omega_k for increasing radii R_k and records the sup change of
/// successive solutions. The returned solution is the last one.
inline Solution solve_exhaustion(const DomainSpec& domain, const std::vector<double>& radii, double h,
                                 const ExhaustionOptions& opt = {}) {
    if (radii.size() < 3) throw ParameterError("exhaustion needs at least three radii");
    for (std::size_t i = 1; i < radii.size(); ++i)
        if (!(radii[i] > radii[i - 1])) throw ParameterError("exhaustion radii must be strictly increasing");
    std::optional<Solution> prev;
    std::vector<std::pair<double, double>> history;
    std::vector<double> changes;
    for (double R : radii) {
        Solution cur = solve_mixed_bvp(std::make_shared<const Grid>(domain.with_radius(R), h), opt.linear);
        if (prev) {
            const Grid& gp = *prev->grid->grid;
            const Grid& gc = *cur.grid->grid;
            const double Rc = opt.compact_radius > 0.0 ? opt.compact_radius : radii.front();
            double diff = 0.0;
            std::vector<long> j(gp.dim());
            for (std::size_t f = 0; f < gp.size(); ++f) {
                if (gp.kind(f) != NodeKind::interior) continue;
                const Point x = gp.node(f);
                if (norm(x) > Rc) continue;
                for (std::size_t d = 0; d < gp.dim(); ++d) j[d] = gp.index(f, d);
                const auto fc = gc.flat(j);
                diff = std::max(diff, std::abs(cur.grid->field[*fc] - prev->grid->field[f]));
            }
            history.emplace_back(R, diff);
            changes.push_back(diff);
            if (changes.size() >= 2 && diff > changes[changes.size() - 2] + opt.tol)
                throw ConvergenceError("exhaustion history is not monotone (under-resolved grid?)", changes);
        }
        prev = std::move(cur);
    }
    Solution out = std::move(*prev);
    out.report.exhaustion_history = history;
    out.report.converged = changes.back() < opt.tol;
    return out;
}

}  // namespace frankel
