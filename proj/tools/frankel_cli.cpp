// frankel: batch verification front end.
//
// Exit status: 0 success, 1 usage or input error, 2 a checked invariant failed.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "frankel/frankel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace frankel;

namespace {

//---------------------------------------------------------------------------//
// Output

std::string num17(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_json(std::ostream& os, const json& j, int indent = 0) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' '), end(static_cast<std::size_t>(indent), ' ');
    if (j.is_object()) {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            os << (first ? "" : ",\n") << pad << json(k).dump() << ": ";
            write_json(os, v, indent + 2);
            first = false;
        }
        os << '\n' << end << '}';
    } else if (j.is_array()) {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            os << (i ? ",\n" : "") << pad;
            write_json(os, j[i], indent + 2);
        }
        os << '\n' << end << ']';
    } else if (j.is_number_float()) {
        os << num17(j.get<double>());
    } else {
        os << j.dump();
    }
}

/// Thrown when a report records a failed invariant check.
struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class Output {
public:
    Output(std::string command, fs::path dir) : command_(std::move(command)), dir_(std::move(dir)) {
        fs::create_directories(dir_);
        start_ = std::chrono::steady_clock::now();
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(path(name), std::ios::binary);
        if (!f) throw ParameterError("cannot write " + path(name).string());
        f.precision(17);
        return f;
    }

    void check(const std::string& name, bool ok) { checks_[name] = ok; }

    /// Writes <command>.json and metadata.json; throws CheckFailed when any
    /// recorded check failed.
    void finish(json report, const json& runtime = json::object()) {
        report["checks"] = checks_;
        auto f = open(command_ + ".json");
        write_json(f, report);
        f << '\n';
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        json meta = {{"command", command_}, {"timestamp", stamp}, {"elapsed_seconds", elapsed}};
        if (!runtime.empty()) meta["runtime"] = runtime;
        auto m = open(command_ + ".metadata.json");
        write_json(m, meta);
        m << '\n';
        std::cout << "report: " << path(command_ + ".json").string() << '\n';
        std::string failed;
        for (const auto& [k, v] : checks_)
            if (!v) failed += (failed.empty() ? "" : ", ") + k;
        if (!failed.empty()) throw CheckFailed("failed checks: " + failed);
    }

private:
    std::string command_;
    fs::path dir_;
    std::map<std::string, bool> checks_;
    std::chrono::steady_clock::time_point start_;
};

//---------------------------------------------------------------------------//
// JSON config files: a flat object whose keys are long option names of the
// selected subcommand or of the global options. Unknown keys are rejected.

class JsonConfig : public CLI::Config {
public:
    JsonConfig(std::string subcommand, std::vector<std::string> globals)
        : subcommand_(std::move(subcommand)), globals_(std::move(globals)) {}

    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
            const std::string name = opt->get_lnames()[0];
            if (opt->count() > 0) j[name] = opt->as<std::string>();
            else if (default_also && !opt->get_default_str().empty()) j[name] = opt->get_default_str();
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        json j;
        try {
            input >> j;
        } catch (const json::exception& e) {
            throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
        std::vector<CLI::ConfigItem> items;
        for (const auto& [key, value] : j.items()) {
            CLI::ConfigItem item;
            item.name = key;
            if (std::find(globals_.begin(), globals_.end(), key) == globals_.end() && !subcommand_.empty())
                item.parents = {subcommand_};
            auto scalar = [](const json& v) -> std::string {
                if (v.is_string()) return v.get<std::string>();
                if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
                if (v.is_number_float()) return num17(v.get<double>());
                if (v.is_number()) return v.dump();
                throw CLI::ConversionError("config values must be scalars or arrays of scalars");
            };
            if (value.is_array())
                for (const auto& v : value) item.inputs.push_back(scalar(v));
            else
                item.inputs.push_back(scalar(value));
            items.push_back(std::move(item));
        }
        return items;
    }

private:
    std::string subcommand_;
    std::vector<std::string> globals_;
};

json read_json_file(const std::string& file) {
    std::ifstream f(file);
    if (!f) throw ParameterError("cannot open " + file);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw ParameterError(file + ": " + e.what());
    }
}

//---------------------------------------------------------------------------//
// Shared options

struct Global {
    std::string output_dir;
    std::uint64_t seed = 12345;
};

struct ModelOpts {
    std::string type = "cylinder";
    int m = 2;
    int k = 1;
    std::vector<double> normal;

    void add(CLI::App* sub) {
        sub->add_option("--model", type, "hyperplane | sphere | cylinder")
            ->check(CLI::IsMember({"hyperplane", "sphere", "cylinder"}))
            ->capture_default_str();
        sub->add_option("--m", m, "surface dimension")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--k", k, "sphere factor dimension of a cylinder")->capture_default_str();
        sub->add_option("--normal", normal, "unit normal of a hyperplane (default e_{m+1})");
    }

    ShrinkerModel model() const {
        json j = {{"type", type}, {"m", m}, {"k", k}};
        if (!normal.empty()) j["normal"] = normal;
        return model_from_json(j);
    }
};

json point_json(const Point& p) { return json(std::vector<double>(p.begin(), p.end())); }

void csv_point_header(std::ostream& os, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) os << 'x' << i + 1 << ',';
}

void csv_point(std::ostream& os, const Point& p) {
    for (double v : p) os << v << ',';
}

//---------------------------------------------------------------------------//
// Geometry commands

void verify_shrinker(const Global& g, const ModelOpts& mo, std::size_t samples, double tol) {
    Output out("verify-shrinker", g.output_dir);
    const ShrinkerModel model = mo.model();
    auto csv = out.open("verify-shrinker.csv");
    csv_point_header(csv, model.ambient_dim());
    csv << "residual\n";
    double worst = 0.0;
    for (const auto& p : model_samples(model, samples)) {
        const double r = norm(shrinker_residual(sample_model(model, p)));
        worst = std::max(worst, r);
        csv_point(csv, p);
        csv << r << '\n';
    }
    std::cout << "max |x^perp + H| = " << num17(worst) << '\n';
    out.check("shrinker_residual", worst < tol);
    out.finish({{"model", model}, {"samples", samples}, {"tolerance", tol}, {"max_residual", worst}});
}

void identities(const Global& g, const ModelOpts& mo, int index, std::size_t samples, double fd_step, double tol,
                double slack_tol) {
    Output out("identities", g.output_dir);
    const ShrinkerModel model = mo.model();
    if (index <= 0) index = model.kind() == ModelKind::Cylinder ? model.k() : 1;
    auto csv = out.open("identities.csv");
    csv_point_header(csv, model.ambient_dim());
    csv << "u,grad_id_residual,laplu_residual,half_weighted_laplacian,sqrtu_slack\n";
    double worst = 0.0, slack = std::numeric_limits<double>::infinity();
    for (const auto& p : model_samples(model, samples)) {
        const auto r = cylinder_identities(index, model, p, fd_step);
        worst = std::max({worst, std::abs(r.grad_id_residual), std::abs(r.laplu_residual)});
        if (r.sqrtu_slack) slack = std::min(slack, *r.sqrtu_slack);
        csv_point(csv, p);
        csv << r.u << ',' << r.grad_id_residual << ',' << r.laplu_residual << ',' << r.half_weighted_laplacian << ',';
        if (r.sqrtu_slack) csv << *r.sqrtu_slack;
        csv << '\n';
    }
    std::cout << "max identity residual = " << num17(worst) << ", min slack = " << num17(slack) << '\n';
    out.check("identity_residuals", worst < tol);
    out.check("sqrtu_slack", !(slack < -slack_tol));
    out.finish({{"model", model},
                {"index", index},
                {"samples", samples},
                {"fd_step", fd_step},
                {"max_residual", worst},
                {"min_sqrtu_slack", std::isfinite(slack) ? json(slack) : json(nullptr)}});
}

void volume_growth_cmd(const Global& g, const ModelOpts& mo, const std::vector<double>& radii, int ppd) {
    Output out("volume-growth", g.output_dir);
    const ShrinkerModel model = mo.model();
    const auto vg = extrinsic_volume_growth(model, radii, ppd);
    auto csv = out.open("volume-growth.csv");
    csv << "R,area\n";
    json table = json::array();
    for (const auto& [R, a] : vg.table) {
        csv << R << ',' << a << '\n';
        table.push_back({{"R", R}, {"area", a}});
    }
    std::cout << "fitted exponent = " << num17(vg.fitted_exponent) << '\n';
    out.check("polynomial_growth", vg.fitted_exponent <= model.m() + 0.05);
    out.finish({{"model", model}, {"table", table}, {"fitted_exponent", vg.fitted_exponent}});
}

//---------------------------------------------------------------------------//
// Domain commands

struct LoadedDomain {
    json spec;
    DomainSpec domain;
};

LoadedDomain load_domain(const std::string& file) {
    LoadedDomain d;
    d.spec = read_json_file(file);
    d.domain = domain_from_json(d.spec);
    return d;
}

/// Closed-form solution for slab and annulus descriptions.
std::optional<Solution> closed_form(const json& spec) {
    const auto type = spec.value("type", std::string("custom"));
    const auto dim = spec.value("dim", std::size_t{2});
    if (type == "slab") return solve_slab(spec.at("h1").get<double>(), spec.at("h2").get<double>(), dim);
    if (type == "annulus") return solve_radial(spec.at("a").get<double>(), spec.at("b").get<double>(), dim);
    return std::nullopt;
}

/// Max node error against the closed form over interior nodes; slabs are
/// compared on the inner half of the exhaustion ball.
std::optional<std::pair<double, double>> node_error(const Solution& u, const LoadedDomain& d) {
    const auto exact = closed_form(d.spec);
    if (!exact) return std::nullopt;
    const double radius = d.spec.value("type", "") == "slab" ? 0.5 * d.domain.exhaustion_radius
                                                              : d.domain.exhaustion_radius;
    const Grid& grid = *u.grid->grid;
    double err = 0.0;
    for (std::size_t f = 0; f < grid.size(); ++f)
        if (grid.kind(f) == NodeKind::interior && norm(grid.node(f)) <= radius)
            err = std::max(err, std::abs(u.grid->field[f] - (*exact)(grid.node(f))));
    return std::pair{err, radius};
}

struct SolveArgs {
    std::string domain;
    double h = 1.0 / 32;
    SolveOptions opt;
};

Solution run_solver(const SolveArgs& a, const DomainSpec& dom) { return solve_mixed_bvp(dom, a.h, a.opt); }

void add_solve_options(CLI::App* sub, SolveArgs& a) {
    sub->add_option("--domain", a.domain, "domain description (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--h", a.h, "grid spacing")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", a.opt.tol, "solver residual tolerance")->capture_default_str();
    sub->add_option("--max-iter", a.opt.max_iter, "iteration cap")->capture_default_str();
    sub->add_option("--initial-guess", a.opt.initial_guess, "constant starting value")->capture_default_str();
}

void solve_cmd(const Global& g, const SolveArgs& a) {
    Output out("solve", g.output_dir);
    const auto d = load_domain(a.domain);
    const Solution u = run_solver(a, d.domain);
    {
        auto bin = out.open("solution.bin");
        u.write_grid(bin);
        auto csv = out.open("solution.csv");
        u.grid->field.write_csv(csv);
    }
    json rep = {{"domain", d.spec}, {"report", u.report}};
    if (const auto e = node_error(u, d)) {
        rep["max_error_vs_closed_form"] = e->first;
        rep["error_radius"] = e->second;
        std::cout << "max error vs closed form = " << num17(e->first) << '\n';
    }
    std::cout << "iterations = " << u.report.iterations << ", residual = " << num17(u.report.linear_residual) << '\n';
    out.check("converged", u.report.converged);
    out.check("maximum_principle", u.report.min_value >= 0.0 && u.report.max_value <= 1.0);
    out.finish(rep);
}

void energy_cmd(const Global& g, const SolveArgs& a, std::vector<double> radii, bool exact) {
    Output out("energy", g.output_dir);
    const auto d = load_domain(a.domain);
    std::optional<Solution> u = exact ? closed_form(d.spec) : std::optional<Solution>(run_solver(a, d.domain));
    if (!u) throw ParameterError("--exact needs a slab or annulus domain");
    if (radii.empty()) radii = exhaustion_radii_from_json(d.spec);
    if (radii.empty()) {
        const double R = d.domain.exhaustion_radius;
        radii = {0.25 * R, 0.5 * R, 0.75 * R, R};
    }
    const EnergyOptions opt{.h = a.h, .radius = d.domain.exhaustion_radius};
    const auto rep = energy_report(*u, d.domain, radii, opt);
    auto csv = out.open("energy-growth.csv");
    rep.write_growth_csv(csv);
    std::cout << "energy = " << num17(rep.total_energy) << ", caccioppoli " << num17(rep.caccioppoli_lhs)
              << " <= " << num17(rep.caccioppoli_rhs) << '\n';
    out.check("caccioppoli", rep.caccioppoli_satisfied);
    out.finish({{"domain", d.spec}, {"solution", exact ? "closed_form" : "grid"}, {"energy", rep}});
}

void reilly_cmd(const Global& g, const SolveArgs& a, const std::string& field, double cutoff, double mesh_h,
                const std::vector<double>& chain, std::optional<double> tol) {
    Output out("reilly", g.output_dir);
    const auto d = load_domain(a.domain);
    json rep = {{"domain", d.spec}, {"field", field}};
    if (!chain.empty()) {
        const Solution u = run_solver(a, d.domain);
        const auto c = energy_chain(u, d.domain, chain);
        rep["chain"] = c;
        std::cout << "chain " << (c.consistent ? "holds" : "fails") << (c.attributed ? ", attributed" : "") << '\n';
        out.check("chain_consistent_or_attributed", c.consistent || c.attributed);
        out.finish(rep);
        return;
    }
    const Cutoff phi = cutoff > 0.0 ? Cutoff::quintic(cutoff) : Cutoff::one();
    if (!(mesh_h > 0.0)) mesh_h = a.h;
    ReillyReport r;
    if (field == "x1") {
        r = reilly_residual(ScalarField([](const Point& x) { return x[0]; }), phi, d.domain, mesh_h);
    } else if (field == "quadratic") {
        r = reilly_residual(ScalarField([](const Point& x) { return x[0] * x[1] + 0.5 * x.back() * x.back(); }), phi,
                            d.domain, mesh_h);
    } else if (field == "exact") {
        const auto u = closed_form(d.spec);
        if (!u) throw ParameterError("--field exact needs a slab or annulus domain");
        r = reilly_residual(*u, phi, d.domain, mesh_h);
    } else {
        r = reilly_residual(run_solver(a, d.domain), phi, d.domain, mesh_h);
    }
    rep["cutoff_radius"] = cutoff > 0.0 ? json(cutoff) : json(nullptr);
    rep["reilly"] = r;
    std::cout << "volume side = " << num17(r.volume_side) << ", boundary side = " << num17(r.boundary_side)
              << ", residual = " << num17(r.residual) << '\n';
    if (tol) out.check("residual_below_tol", r.residual <= *tol);
    out.finish(rep);
}

//---------------------------------------------------------------------------//
// Barrier, separation, Monte Carlo, acceptance

void barrier_cmd(const Global& g, const BarrierParams& p, std::size_t samples, double quad_tol, std::size_t rows,
                 const std::string& sweep) {
    Output out("barrier", g.output_dir);
    if (!sweep.empty()) {
        const auto table = barrier_sweep(read_json_file(sweep));
        auto csv = out.open("barrier-sweep.csv");
        csv << "R,a,m,z_norm,integral,psi_prime_0,rough_bound,monotone,bound_holds,max_violation\n";
        bool mono = true, bound = true;
        double viol = 0.0;
        for (const auto& r : table) {
            const auto& q = r.barrier.params;
            csv << q.R << ',' << q.a << ',' << q.m << ',' << q.z_norm << ',' << r.barrier.integral << ','
                << r.barrier.psi_prime_0 << ',' << r.barrier.rough_bound << ',' << r.monotone << ',' << r.bound_holds
                << ',' << r.max_violation << '\n';
            mono = mono && r.monotone;
            bound = bound && r.bound_holds;
            viol = std::max(viol, r.max_violation);
        }
        std::cout << table.size() << " parameter tuples, max violation = " << num17(viol) << '\n';
        out.check("monotone", mono);
        out.check("derivative_bound", bound);
        out.check("supersolution", viol <= 1e-6);
        out.finish({{"sweep", table}});
        return;
    }
    const auto b = build_psi(p, quad_tol);
    const auto s = supersolution_check(p, samples, {.quad_tol = quad_tol});
    auto csv = out.open("barrier-psi.csv");
    csv << "t,psi,psi_prime,psi_second\n";
    for (std::size_t i = 0; i <= rows; ++i) {
        const double t = p.a * static_cast<double>(i) / static_cast<double>(rows);
        csv << t << ',' << b.psi(t) << ',' << b.psi_prime(t) << ',' << b.psi_second(t) << '\n';
    }
    std::cout << "psi'(0) = " << num17(b.psi_prime_0) << ", rough bound = " << num17(b.rough_bound)
              << ", max violation = " << num17(s.max_violation) << '\n';
    out.check("monotone", psi_monotone(b));
    out.check("derivative_bound", b.psi_prime_0 <= b.rough_bound);
    out.check("supersolution", s.max_violation <= 1e-6);
    out.finish({{"barrier", b}, {"supersolution", s}});
}

void separation_cmd(const Global& g, const std::string& domain, const SeparationHypothesis& hyp,
                    const std::vector<double>& norms, std::size_t directions) {
    Output out("separation", g.output_dir);
    const auto d = load_domain(domain);
    const auto r = separation_check(hyp, d.domain.sigma1, d.domain.sigma2, norms, directions);
    auto csv = out.open("separation.csv");
    csv << "z_norm,ratio,truncated\n";
    for (const auto& e : r.ratios) csv << e.z_norm << ',' << e.ratio << ',' << e.truncated << '\n';
    std::cout << "separation heuristic " << (r.passes ? "passes" : "fails") << '\n';
    out.finish({{"domain", d.spec}, {"b", hyp.b}, {"poly_P", hyp.poly_P}, {"result", r}});
}

void mc_cmd(const Global& g, const std::string& domain, const std::vector<double>& x0, McConfig cfg) {
    Output out("mc", g.output_dir);
    const auto d = load_domain(domain);
    cfg.seed = g.seed;
    const Point x(x0.begin(), x0.end());
    const auto e = ou_hitting_probability(x, d.domain, cfg);
    json rep = {{"domain", d.spec},
                {"x0", point_json(x)},
                {"config", {{"n_paths", cfg.n_paths}, {"dt", cfg.dt}, {"seed", cfg.seed}, {"max_time", cfg.max_time}}},
                {"estimate", e}};
    if (const auto u = closed_form(d.spec)) {
        const double exact = (*u)(x);
        rep["closed_form"] = exact;
        rep["z_score"] = e.stderr_ > 0.0 ? json((e.p_hat - exact) / e.stderr_) : json(nullptr);
    }
    if (cfg.trace) {
        auto csv = out.open("mc-trace.csv");
        e.write_trace_csv(csv);
    }
    std::cout << "p_hat = " << num17(e.p_hat) << " +- " << num17(e.stderr_) << '\n';
    if (e.truncation_warning) std::cerr << "warning: more than 10% of paths were truncated\n";
    out.check("path_accounting", e.hits_sigma1 + e.hits_sigma2 + e.truncated == cfg.n_paths);
    out.finish(rep, {{"threads", cfg.threads}});
}

void acceptance_cmd(const Global& g, const std::vector<int>& only) {
    Output out("acceptance", g.output_dir);
    const auto results = acceptance::run(std::cout, only);
    json criteria = json::array(), timing = json::array();
    std::size_t passed = 0;
    for (const auto& c : results) {
        criteria.push_back({{"id", c.id}, {"name", c.name}, {"tolerance_met", c.tolerance_met}, {"detail", c.detail}});
        timing.push_back({{"id", c.id}, {"seconds", c.seconds}, {"budget", c.budget}});
        out.check("criterion_" + std::to_string(c.id), c.passed());
        passed += c.passed() ? 1 : 0;
    }
    std::cout << passed << '/' << results.size() << " criteria passed\n";
    out.finish({{"criteria", criteria}}, {{"timing", timing}});
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Verification workflows for weighted minimal hypersurfaces and f-harmonic functions", "frankel"};
    app.set_help_flag("--help", "print help and exit");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "JSON file of option values for the subcommand");
    app.allow_config_extras(false);
    Global g;
    const char* env = std::getenv("FRANKEL_OUTPUT_DIR");
    g.output_dir = env ? env : "frankel-output";
    app.add_option("--output-dir", g.output_dir, "directory for reports (default $FRANKEL_OUTPUT_DIR)")
        ->capture_default_str();
    app.add_option("--seed", g.seed, "random seed")->capture_default_str();

    std::function<void()> action;
    ModelOpts mo;

    std::size_t samples = 1000;
    double tol = 1e-9;
    auto* vs = app.add_subcommand("verify-shrinker", "shrinker equation residuals on a model surface");
    mo.add(vs);
    vs->add_option("--samples", samples)->capture_default_str();
    vs->add_option("--tol", tol, "residual tolerance")->capture_default_str();
    vs->callback([&] { action = [&] { verify_shrinker(g, mo, samples, tol); }; });

    int index = 0;
    std::size_t id_samples = 200;
    double fd_step = 1e-4, id_tol = 1e-6, slack_tol = 1e-8;
    auto* id = app.add_subcommand("identities", "identities for u = |xbar|^2 on a model surface");
    mo.add(id);
    id->add_option("--index", index, "number of split coordinates minus one (default: the model's k)");
    id->add_option("--samples", id_samples)->capture_default_str();
    id->add_option("--fd-step", fd_step)->check(CLI::PositiveNumber)->capture_default_str();
    id->add_option("--tol", id_tol, "identity residual tolerance")->capture_default_str();
    id->add_option("--slack-tol", slack_tol, "allowed negative slack")->capture_default_str();
    id->callback([&] { action = [&] { identities(g, mo, index, id_samples, fd_step, id_tol, slack_tol); }; });

    std::vector<double> radii{2, 4, 6, 8, 10};
    int ppd = 256;
    auto* vg = app.add_subcommand("volume-growth", "extrinsic area growth in balls");
    mo.add(vg);
    vg->add_option("--radii", radii)->capture_default_str();
    vg->add_option("--points-per-dim", ppd)->check(CLI::PositiveNumber)->capture_default_str();
    vg->callback([&] { action = [&] { volume_growth_cmd(g, mo, radii, ppd); }; });

    SolveArgs sa;
    auto* so = app.add_subcommand("solve", "mixed boundary value problem on a grid");
    add_solve_options(so, sa);
    so->callback([&] { action = [&] { solve_cmd(g, sa); }; });

    std::vector<double> energy_radii;
    bool exact = false;
    auto* en = app.add_subcommand("energy", "weighted Dirichlet energy, growth profile and Caccioppoli bound");
    add_solve_options(en, sa);
    en->add_option("--radii", energy_radii, "growth profile radii");
    en->add_flag("--exact", exact, "use the closed-form solution");
    en->callback([&] { action = [&] { energy_cmd(g, sa, energy_radii, exact); }; });

    std::string field = "solution";
    double cutoff = 0.0, mesh_h = 0.0;
    std::vector<double> chain;
    std::optional<double> reilly_tol;
    auto* re = app.add_subcommand("reilly", "localized Reilly identity and energy chain");
    add_solve_options(re, sa);
    re->add_option("--field", field, "solution | exact | x1 | quadratic")
        ->check(CLI::IsMember({"solution", "exact", "x1", "quadratic"}))
        ->capture_default_str();
    re->add_option("--cutoff", cutoff, "cutoff radius (0: no cutoff)")->capture_default_str();
    re->add_option("--mesh-h", mesh_h, "quadrature cell size (default --h)");
    re->add_option("--chain", chain, "radii for the energy chain instead of the identity");
    re->add_option("--residual-tol", reilly_tol, "fail when the residual exceeds this");
    re->callback([&] { action = [&] { reilly_cmd(g, sa, field, cutoff, mesh_h, chain, reilly_tol); }; });

    BarrierParams bp{1.0, 1.0, 2, 0.0};
    std::size_t b_samples = 1000, rows = 64;
    double quad_tol = 1e-10;
    std::string sweep;
    auto* ba = app.add_subcommand("barrier", "radial barrier construction and supersolution check");
    ba->add_option("--R", bp.R)->capture_default_str();
    ba->add_option("--a", bp.a)->capture_default_str();
    ba->add_option("--m", bp.m)->capture_default_str();
    ba->add_option("--z-norm", bp.z_norm)->capture_default_str();
    ba->add_option("--samples", b_samples)->capture_default_str();
    ba->add_option("--quad-tol", quad_tol)->capture_default_str();
    ba->add_option("--rows", rows, "rows of the psi table")->check(CLI::PositiveNumber)->capture_default_str();
    ba->add_option("--sweep", sweep, "parameter sweep description (JSON)")->check(CLI::ExistingFile);
    ba->callback([&] { action = [&] { barrier_cmd(g, bp, b_samples, quad_tol, rows, sweep); }; });

    std::string sep_domain;
    SeparationHypothesis hyp;
    std::vector<double> norms{1.5, 2, 3, 4, 5, 6, 7, 8};
    std::size_t directions = 16;
    auto* se = app.add_subcommand("separation", "exponential separation heuristic between the boundary pieces");
    se->add_option("--domain", sep_domain, "domain description (JSON)")->required()->check(CLI::ExistingFile);
    se->add_option("--b", hyp.b)->capture_default_str();
    se->add_option("--poly", hyp.poly_P, "polynomial coefficients, lowest degree first");
    se->add_option("--norms", norms)->capture_default_str();
    se->add_option("--directions", directions)->capture_default_str();
    se->callback([&] { action = [&] { separation_cmd(g, sep_domain, hyp, norms, directions); }; });

    std::string mc_domain;
    std::vector<double> x0;
    McConfig mc;
    std::optional<double> snap;
    auto* mcs = app.add_subcommand("mc", "Monte Carlo hitting probability");
    mcs->add_option("--domain", mc_domain, "domain description (JSON)")->required()->check(CLI::ExistingFile);
    mcs->add_option("--x0", x0, "starting point")->required();
    mcs->add_option("--n-paths", mc.n_paths)->capture_default_str();
    mcs->add_option("--dt", mc.dt)->capture_default_str();
    mcs->add_option("--max-time", mc.max_time)->capture_default_str();
    mcs->add_option("--boundary-snap", snap, "hit band width");
    mcs->add_option("--threads", mc.threads, "0: hardware concurrency")->capture_default_str();
    mcs->add_flag("--trace", mc.trace, "write per-path exit records");
    mcs->callback([&] {
        action = [&] {
            mc.boundary_snap = snap;
            mc_cmd(g, mc_domain, x0, mc);
        };
    });

    std::vector<int> only;
    auto* ac = app.add_subcommand("acceptance", "run the acceptance suite");
    ac->add_option("--only", only, "criterion ids to run");
    ac->callback([&] { action = [&] { acceptance_cmd(g, only); }; });

    std::string selected;
    for (int i = 1; i < argc && selected.empty(); ++i)
        for (const CLI::App* sub : app.get_subcommands({}))
            if (sub->get_name() == argv[i]) selected = argv[i];
    app.config_formatter(std::make_shared<JsonConfig>(selected, std::vector<std::string>{"output-dir", "seed"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    try {
        action();
    } catch (const CheckFailed& e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return 2;
    } catch (const ContractViolation& e) {
        std::cerr << "contract violation: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

