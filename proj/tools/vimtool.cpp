// vimtool: batch front end.
//
//   vimtool <analyze|simulate-paths|simulate-excursions|simulate-tree|renewal|verify>
//           --config PATH [--out DIR] [--seed N] [--quiet]
//
// Exit codes: 0 ok, 1 invalid config, 2 assumption violated, 3 numerical
// failure, 4 resource limit, 5 verification failed.  Every error also goes to
// stderr as one JSON line.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "io.hpp"
#include "json.hpp"
#include "vim/vim.hpp"

#ifndef VIM_VERSION
#define VIM_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
using vimtool::CsvBuilder;
using vimtool::OutputDir;

enum Exit { kOk = 0, kConfig = 1, kAssumption = 2, kNumerical = 3, kResource = 4, kVerify = 5 };

struct Failure {
    Exit code;
    std::string kind;
    std::string message;
    json extra = json::object();
};

void emit_error(const Failure& f) {
    json j = {{"error", f.kind}, {"exit_code", static_cast<int>(f.code)}, {"message", f.message}};
    for (const auto& [k, v] : f.extra.items()) j[k] = v;
    std::cerr << j.dump() << '\n';
}

json estimate(const std::optional<vim::Estimate>& e) {
    if (!e) return nullptr;
    return {{"value", vim::config_detail::number(e->value)}, {"error", vim::config_detail::number(e->error)}};
}

json mc(const vim::McEstimate& e) {
    return {{"value", vim::config_detail::number(e.value)}, {"std_error", vim::config_detail::number(e.std_error)}};
}

json assumption_json(const vim::AssumptionReport& r) {
    json w = json::object();
    for (const auto& [k, v] : r.witnesses)
        w[k] = {{"value", vim::config_detail::number(v.value)}, {"error", vim::config_detail::number(v.error)}, {"finite", v.finite}};
    return {{"a1_ok", r.a1_ok}, {"a2_ok", r.a2_ok}, {"sbar_ok", r.sbar_ok}, {"mh_ok", r.mh_ok}, {"mh2_ok", r.mh2_ok},
            {"all_ok", r.all_ok()}, {"witnesses", w}, {"notes", r.notes}};
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

struct Context {
    vim::RunConfig cfg;
    std::uint64_t seed = 0;
    std::string seed_source = "config";
    bool quiet = false;
    std::optional<OutputDir> out;
    bool config_ok = false;
    json manifest_extra = {{"result", "ok"}};

    void note(const std::string& s) const {
        if (!quiet) std::printf("%s\n", s.c_str());
    }
    [[nodiscard]] vim::StreamKey key(std::uint64_t stream) const { return {seed, stream}; }
    [[nodiscard]] double smallest_eps() const { return cfg.excursion.epsilon.back(); }
};

/// Validates the standing assumptions, writing the report; throws Failure on violation.
vim::AssumptionReport check_assumptions(Context& ctx, const vim::CoefficientSet& c) {
    const auto rep = vim::validate_assumptions(c, ctx.cfg.analysis.tol);
    if (!rep.all_ok()) {
        ctx.out->write("assumption_report.json", pretty(assumption_json(rep)));
        throw Failure{kAssumption, "assumption", "standing assumptions violated", {{"assumptions", assumption_json(rep)}}};
    }
    return rep;
}

void cmd_analyze(Context& ctx) {
    const auto c = ctx.cfg.coefficients();
    const auto rep = check_assumptions(ctx, c);
    const vim::ScaleTable t(c);
    const auto a = vim::analyze(t, ctx.cfg.tree.x0, ctx.cfg.analysis.tol);
    json errors = json::object();
    for (const auto& [k, v] : a.errors) errors[k] = v;
    const json report = {{"family", c.family_name()},
                         {"x0", ctx.cfg.tree.x0},
                         {"theta", vim::config_detail::number(a.theta.value)},
                         {"theta_error", vim::config_detail::number(a.theta.error)},
                         {"regime", vim::to_string(a.regime)},
                         {"alpha", estimate(a.alpha)},
                         {"q", estimate(a.q)},
                         {"expected_area", estimate(a.expected_area)},
                         {"critical_ratio", estimate(a.critical_ratio)},
                         {"errors", errors},
                         {"assumptions", assumption_json(rep)}};
    ctx.out->write("report.json", pretty(report));
    ctx.note("theta = " + vimtool::fmt_double(a.theta.value) + " (" + vim::to_string(a.regime) + ")");
}

void cmd_paths(Context& ctx) {
    const auto c = ctx.cfg.coefficients();
    check_assumptions(ctx, c);
    const auto& m = ctx.cfg.mc;
    const double x0 = ctx.cfg.tree.x0;
    const auto stride = static_cast<std::size_t>(std::max(1.0, std::round(0.01 / m.dt)));
    const auto steps = static_cast<std::size_t>(std::ceil(m.horizon / m.dt - 1e-9));
    const std::size_t points = steps / stride + 1;
    std::vector<vim::RunningStats> curve(points);
    CsvBuilder paths({"path_id", "absorption_time", "occupation", "max"});
    const std::size_t chunk = 1024;
    struct PathOut {
        std::vector<double> grid;
        double absorbed = 0.0, occupation = 0.0, max = 0.0;
    };
    for (std::size_t lo = 0; lo < m.n_paths; lo += chunk) {
        const std::size_t n = std::min(chunk, m.n_paths - lo);
        std::vector<PathOut> res(n);
        vim::parallel_for(n, m.threads, [&](std::size_t j) {
            const auto p = vim::simulate_path(c, x0, m.dt, m.horizon, vim::Stream(ctx.key(1).sub(lo + j)));
            PathOut& o = res[j];
            o.grid.assign(points, 0.0);
            for (std::size_t k = 0; k < points && k * stride < p.values.size(); ++k) o.grid[k] = p.values[k * stride];
            o.absorbed = p.absorption_time.value_or(vim::kInf);
            o.occupation = vim::path_functional(p, [&](double y) { return c.a(y); });
            o.max = *std::max_element(p.values.begin(), p.values.end());
        });
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t k = 0; k < points; ++k) curve[k].add(res[j].grid[k]);
            paths.row(lo + j, res[j].absorbed, res[j].occupation, res[j].max);
        }
    }
    CsvBuilder mean({"t", "mean", "std_error"});
    for (std::size_t k = 0; k < points; ++k) {
        const auto e = curve[k].estimate();
        mean.row(m.dt * static_cast<double>(k * stride), e.value, e.std_error);
    }
    ctx.out->write("paths.csv", paths.str());
    ctx.out->write("mean_curve.csv", mean.str());
    ctx.note("simulated " + std::to_string(m.n_paths) + " paths");
}

vim::ExcursionOptions excursion_options(const Context& ctx, double eps) {
    vim::ExcursionOptions o;
    o.dt = std::min(ctx.cfg.mc.dt, 0.01 * eps);
    o.horizon = ctx.cfg.mc.horizon;
    o.start_eps_factor = ctx.cfg.excursion.start_eps_factor;
    o.retry_cap = ctx.cfg.excursion.retry_cap;
    return o;
}

void cmd_excursions(Context& ctx) {
    const auto c = ctx.cfg.coefficients();
    check_assumptions(ctx, c);
    const vim::ScaleTable t(c);
    const auto& eps = ctx.cfg.excursion.epsilon;
    CsvBuilder rows({"epsilon", "sample_id", "weight", "t_eps", "max", "lifetime", "emigration", "attempts"});
    json per_eps = json::array();
    std::vector<vim::SweepPoint> pts;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const auto opt = excursion_options(ctx, eps[i]);
        struct Row {
            double t_eps, max, lifetime, emigration, weight;
            int attempts;
        };
        const auto res = vim::map_excursions(t, eps[i], ctx.cfg.mc.n_paths, opt, ctx.key(2).sub(i), ctx.cfg.mc.threads,
                                             [&](std::size_t, const vim::Excursion& e) {
                                                 return Row{e.t_eps(), e.max(), e.lifetime.value_or(vim::kInf),
                                                            vim::excursion_functional(e, [&](double y) { return c.a(y); }),
                                                            e.weight, e.attempts};
                                             });
        vim::RunningStats st;
        for (std::size_t k = 0; k < res.size(); ++k) {
            const auto& r = res[k];
            rows.row(eps[i], k, r.weight, r.t_eps, r.max, r.lifetime, r.emigration, r.attempts);
            st.add(r.emigration);
        }
        const auto est = st.estimate(1.0 / t.S(eps[i]));
        pts.push_back({eps[i], est});
        per_eps.push_back({{"epsilon", eps[i]}, {"dt", opt.dt}, {"q_emigration", mc(est)}});
    }
    json summary = {{"per_epsilon", per_eps}, {"theta", estimate(vim::extinction_criterion(t))}};
    if (eps.size() >= 2) {
        const auto sw = vim::extrapolate_sweep(pts, 1);
        summary["extrapolated"] = mc({sw.extrapolated.value, sw.extrapolated.std_error});
    }
    ctx.out->write("excursions.csv", rows.str());
    ctx.out->write("sweep.json", pretty(summary));
    ctx.note("sampled excursions at " + std::to_string(eps.size()) + " levels");
}

vim::TreeOptions tree_options(const Context& ctx) {
    vim::TreeOptions o;
    o.epsilon = ctx.smallest_eps();
    o.dt = std::min(ctx.cfg.mc.dt, 0.01 * o.epsilon);
    o.horizon = ctx.cfg.mc.horizon;
    o.node_cap = ctx.cfg.tree.node_cap;
    o.start_eps_factor = ctx.cfg.excursion.start_eps_factor;
    o.retry_cap = ctx.cfg.excursion.retry_cap;
    return o;
}

std::string tree_csv(const vim::IslandTree& tree) {
    CsvBuilder csv({"node_id", "parent_id", "birth_time", "generation", "excursion_max", "lifetime"});
    for (const auto& n : tree.nodes)
        csv.row(n.id, static_cast<long long>(n.parent), n.birth_time, n.generation, n.excursion_max,
                n.lifetime.value_or(vim::kInf));
    return csv.str();
}

void cmd_tree(Context& ctx) {
    const auto c = ctx.cfg.coefficients();
    check_assumptions(ctx, c);
    const vim::ScaleTable t(c);
    const auto opt = tree_options(ctx);
    const double step = std::max(opt.dt, opt.horizon / 1000.0);
    std::vector<double> grid;
    for (std::size_t k = 0; step * static_cast<double>(k) <= opt.horizon + 1e-12; ++k) grid.push_back(step * static_cast<double>(k));

    vim::TreeOptions first = opt;
    first.keep_paths = true;
    vim::IslandTree tree;
    try {
        tree = vim::simulate_tree(t, ctx.cfg.tree.x0, first, ctx.key(3).sub(0));
    } catch (const vim::TreeResourceError& e) {
        ctx.out->write("tree_partial.csv", tree_csv(e.partial()));
        throw Failure{kResource, "resource", e.what(), {{"partial", "tree_partial.csv"}}};
    }
    ctx.out->write("tree.csv", tree_csv(tree));
    const auto V = vim::total_mass_curve(tree, vim::Characteristic::total_mass(), grid);
    CsvBuilder curve({"t", "V"});
    for (std::size_t k = 0; k < grid.size(); ++k) curve.row(grid[k], V[k]);
    ctx.out->write("mass_curve.csv", curve.str());

    vim::EnsembleSpec spec;
    spec.x0 = ctx.cfg.tree.x0;
    spec.n_trees = ctx.cfg.mc.n_paths;
    spec.delta = ctx.cfg.tree.delta_or_default();
    spec.curve_step = step;
    spec.fit_growth = true;
    spec.threads = ctx.cfg.mc.threads;
    spec.tree = opt;
    const auto s = vim::extinction_experiment(t, spec, ctx.key(3).sub(1));
    const json summary = {
        {"epsilon", opt.epsilon},
        {"horizon", opt.horizon},
        {"delta", spec.delta},
        {"trees", s.trees},
        {"survivors", s.survivors},
        {"survival_frequency", mc(s.survival)},
        {"mean_area", mc(s.area)},
        {"growth_fit", s.growth ? mc(*s.growth) : json(nullptr)},
        {"note", "extinction is operationalized as V_T <= delta at the finite horizon T"}};
    ctx.out->write("summary.json", pretty(summary));
    ctx.note("tree with " + std::to_string(tree.nodes.size()) + " islands; survival " + vimtool::fmt_double(s.survival.value));
}

void cmd_renewal(Context& ctx) {
    const auto c = ctx.cfg.coefficients();
    check_assumptions(ctx, c);
    const vim::ScaleTable t(c);
    const double eps = ctx.smallest_eps();
    auto opt = excursion_options(ctx, eps);
    opt.window = ctx.cfg.mc.horizon;
    opt.horizon = std::max(ctx.cfg.mc.horizon, 100.0);
    const double step = std::max(ctx.cfg.mc.dt, ctx.cfg.mc.horizon / 2000.0);
    std::vector<double> grid;
    for (std::size_t k = 0; step * static_cast<double>(k) <= ctx.cfg.mc.horizon + 1e-12; ++k) grid.push_back(step * static_cast<double>(k));
    const auto ex = vim::sample_excursions(t, eps, ctx.cfg.mc.n_paths, opt, ctx.key(4), ctx.cfg.mc.threads);
    const auto f = vim::estimate_fQ_curve(ex, [](double y) { return y; }, grid);
    const auto mu = vim::estimate_fQ_curve(ex, [&](double y) { return c.a(y); }, grid);
    vim::RenewalInput in;
    in.dt = step;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        in.f.push_back(f[k].value);
        in.mu.push_back(mu[k].value);
    }
    const auto m = vim::solve_renewal(in);
    CsvBuilder csv({"t", "f", "mu", "m"});
    for (std::size_t k = 0; k < grid.size(); ++k) csv.row(grid[k], in.f[k], in.mu[k], m[k]);
    ctx.out->write("renewal.csv", csv.str());

    const auto a = vim::analyze(t, ctx.cfg.tree.x0, ctx.cfg.analysis.tol);
    json summary = {{"epsilon", eps}, {"dt", step}, {"horizon", ctx.cfg.mc.horizon}, {"regime", vim::to_string(a.regime)}};
    if (a.regime == vim::Regime::Supercritical && a.alpha) {
        const auto r = vim::asymptotic_ratios(m, a.alpha->value, in);
        summary["alpha"] = a.alpha->value;
        summary["tail_ratio"] = r.tail_ratio;
        summary["predicted"] = r.predicted;
        summary["gap"] = r.gap();
        summary["horizon_sufficient"] = ctx.cfg.mc.horizon >= 40.0 / a.alpha->value;
    } else if (a.regime == vim::Regime::Critical) {
        const auto r = vim::cesaro_ratio(m, in);
        summary["cesaro_average"] = r.average;
        summary["predicted"] = r.predicted;
        summary["gap"] = r.gap();
    } else {
        summary["total_integral"] = vim::detail::trapezoid_sum(m, step, [](double) { return 1.0; });
    }
    ctx.out->write("renewal.json", pretty(summary));
    ctx.note("renewal solved on " + std::to_string(grid.size()) + " points");
}

void cmd_verify(Context& ctx) {
    vim::VerifyOptions o;
    o.seed = ctx.seed;
    o.threads = ctx.cfg.mc.threads;
    json results = json::array();
    std::vector<int> failed;
    vim::verify::run(o, {}, [&](const vim::CheckResult& r) {
        results.push_back({{"criterion", r.id}, {"name", r.name}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
        if (!r.pass) failed.push_back(r.id);
        ctx.note(std::string(r.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(r.id) + " (" + r.name + "): " + r.detail);
    });
    ctx.out->write("verify.json", pretty({{"seed", ctx.seed}, {"results", results}, {"all_pass", failed.empty()}}));
    if (!failed.empty()) {
        std::string names;
        for (int id : failed) names += (names.empty() ? "" : ", ") + std::to_string(id);
        throw Failure{kVerify, "verify", "failed criteria: " + names, {{"failed", failed}}};
    }
}

void write_manifest(const Context& ctx, const std::string& command, const std::string& started, int code) {
    if (!ctx.out) return;
    const json m = {{"tool", "vimtool"},
                    {"version", VIM_VERSION},
                    {"command", command},
                    {"config_sha256", ctx.config_ok ? json(vimtool::sha256_hex(vim::to_json(ctx.cfg).dump())) : json(nullptr)},
                    {"config", ctx.config_ok ? vim::to_json(ctx.cfg) : json(nullptr)},
                    {"seed", ctx.seed},
                    {"seed_source", ctx.seed_source},
                    {"started", started},
                    {"finished", vimtool::utc_now()},
                    {"exit_code", code},
                    {"files", ctx.out->file_list()},
                    {"status", ctx.manifest_extra}};
    vimtool::atomic_write(ctx.out->path() / "manifest.json", pretty(m));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virgin Island Model toolkit"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    const std::vector<std::string> names{"analyze", "simulate-paths", "simulate-excursions", "simulate-tree", "renewal", "verify"};
    for (const auto& n : names) {
        auto* sub = app.add_subcommand(n);
        sub->add_option("--config", config_path, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "output directory (overrides outputs.directory)");
        sub->add_option("--seed", seed, "seed override");
        sub->add_flag("--quiet", quiet, "no progress output");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error({kConfig, "usage", e.what()});
        return kConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();
    const std::string started = vimtool::utc_now();

    Context ctx;
    ctx.quiet = quiet;
    int code = kOk;
    try {
        try {
            ctx.cfg = vim::parse_config(vimtool::read_file(config_path));
        } catch (const std::runtime_error& e) {
            throw vim::ConfigError(e.what());
        }
        ctx.config_ok = true;
        ctx.seed = ctx.cfg.mc.seed;
        if (const char* env = std::getenv("VIM_SEED")) {
            try {
                std::size_t used = 0;
                ctx.seed = std::stoull(env, &used);
                if (used != std::string(env).size()) throw std::invalid_argument(env);
            } catch (const std::exception&) {
                throw vim::ConfigError(std::string("VIM_SEED is not an unsigned integer: ") + env);
            }
            ctx.seed_source = "VIM_SEED";
        }
        if (seed) {
            ctx.seed = *seed;
            ctx.seed_source = "--seed";
        }
        ctx.out.emplace(out_dir.empty() ? ctx.cfg.outputs.directory : out_dir);

        if (command == "analyze") cmd_analyze(ctx);
        else if (command == "simulate-paths") cmd_paths(ctx);
        else if (command == "simulate-excursions") cmd_excursions(ctx);
        else if (command == "simulate-tree") cmd_tree(ctx);
        else if (command == "renewal") cmd_renewal(ctx);
        else cmd_verify(ctx);
    } catch (const Failure& f) {
        emit_error(f);
        code = f.code;
        ctx.manifest_extra = {{"result", "error"}, {"error", f.kind}, {"partial", f.code == kResource}};
    } catch (const vim::ConfigError& e) {
        emit_error({kConfig, "config", e.what()});
        code = kConfig;
        ctx.manifest_extra = {{"result", "error"}, {"error", "config"}};
        if (!ctx.out && !out_dir.empty()) {
            try {
                ctx.out.emplace(out_dir);
            } catch (const std::exception&) {
            }
        }
    } catch (const vim::ResourceError& e) {
        emit_error({kResource, "resource", e.what()});
        code = kResource;
        ctx.manifest_extra = {{"result", "error"}, {"error", "resource"}, {"partial", true}};
    } catch (const std::exception& e) {
        emit_error({kNumerical, "numerical", e.what()});
        code = kNumerical;
        ctx.manifest_extra = {{"result", "error"}, {"error", "numerical"}};
    }
    try {
        write_manifest(ctx, command, started, code);
    } catch (const std::exception& e) {
        emit_error({kResource, "io", e.what()});
        if (code == kOk) code = kResource;
    }
    return code;
}
