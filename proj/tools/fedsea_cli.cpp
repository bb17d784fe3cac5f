// Command-line driver: run, sweep, speedup, tau-study, audit, selftest.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsea/fedsea.hpp"
#include "fedsea/selftest.hpp"

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::size_t> replicates;
    std::optional<std::uint64_t> seed;
    std::size_t threads = 0;
    std::string plots = "on";
    std::vector<std::size_t> values;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config) {
    auto* opt = cmd->add_option("--config", c.config, "Config file (JSON)");
    if (needs_config) opt->required();
    cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--replicates", c.replicates, "Override the number of replicates");
    cmd->add_option("--seed", c.seed, "Override the seed");
    cmd->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
    cmd->add_option("--plots", c.plots, "Write SVG plots")->check(CLI::IsMember({"on", "off"}));
}

void apply_overrides(fedsea::ExperimentConfig& config, const Common& c) {
    if (c.replicates) config.replicates = *c.replicates;
    if (c.seed) config.seed = *c.seed;
    config.validate();
}

// Study files are {"base": config, "values": [...]}; a plain config plus --values also works.
std::pair<fedsea::ExperimentConfig, std::vector<std::size_t>> load_study(const Common& c) {
    const auto j = fedsea::load_json_file(c.config);
    fedsea::ExperimentConfig base;
    std::vector<std::size_t> values = c.values;
    if (j.contains("base")) {
        fedsea::detail::reject_unknown_keys(j, {"base", "values"}, "study");
        base = fedsea::config_from_json(j["base"]);
        if (values.empty() && j.contains("values"))
            for (const auto& v : j["values"]) values.push_back(fedsea::detail::parse_count(v, "values"));
    } else {
        base = fedsea::config_from_json(j);
    }
    if (values.empty()) throw fedsea::ConfigError("study needs a list of values (\"values\" in the file or --values)");
    apply_overrides(base, c);
    return {base, values};
}

void print_result(const fedsea::ExperimentResult& r) {
    std::cout << "regret " << r.regret << " +- " << r.regret_std_error << " over " << r.replicates.size()
              << " replicates (T=" << r.config.horizon << ", M=" << r.config.num_clients << ", tau=" << r.config.sync_period
              << ")\n";
    for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated online SGD simulator and regret-bound auditor"};
    app.require_subcommand(1);
    Common run_o, sweep_o, speed_o, tau_o, audit_o, self_o;
    std::size_t audit_states = 10;

    auto* run = app.add_subcommand("run", "Run one configuration");
    add_common(run, run_o, true);
    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    add_common(sweep, sweep_o, true);
    auto* speed = app.add_subcommand("speedup", "Regret versus number of clients");
    add_common(speed, speed_o, true);
    speed->add_option("--values", speed_o.values, "Client counts");
    auto* tau = app.add_subcommand("tau-study", "Regret versus synchronization period");
    add_common(tau, tau_o, true);
    tau->add_option("--values", tau_o.values, "Synchronization periods");
    auto* audit = app.add_subcommand("audit", "Lemma audits on a frozen run");
    add_common(audit, audit_o, true);
    audit->add_option("--states", audit_states, "Number of frozen states for the Monte Carlo audit");
    auto* self = app.add_subcommand("selftest", "Run the acceptance suite");
    add_common(self, self_o, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto config = fedsea::load_config(run_o.config);
            apply_overrides(config, run_o);
            const auto r = fedsea::run_experiment(config, {run_o.threads});
            fedsea::emit_run(r, run_o.out, run_o.plots == "on");
            print_result(r);
        } else if (*sweep) {
            auto spec = fedsea::sweep_from_json(fedsea::load_json_file(sweep_o.config));
            apply_overrides(spec.base, sweep_o);
            const auto r = fedsea::run_sweep(spec, {sweep_o.threads});
            fedsea::emit_sweep(r, sweep_o.out, sweep_o.plots == "on");
            for (const auto& cell : r.cells) std::cout << cell.label << ": regret " << cell.result.regret << "\n";
            for (const auto& f : r.fits) {
                if (f.power) std::cout << "power law " << f.group << ": b=" << f.power->b << " R^2=" << f.power->r_squared << "\n";
                if (f.log) std::cout << "log law " << f.group << ": a=" << f.log->a << " R^2=" << f.log->r_squared << "\n";
            }
        } else if (*speed) {
            auto [base, values] = load_study(speed_o);
            const auto s = fedsea::speedup_study(base, values, {speed_o.threads});
            fedsea::emit_speedup(s, speed_o.out, speed_o.plots == "on");
            for (const auto& r : s.rows)
                std::cout << "M=" << r.value << " regret " << r.regret << " +- " << r.std_error << " ratio " << r.ratio
                          << " (1/sqrt(M)=" << r.reference << ")\n";
            for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
        } else if (*tau) {
            auto [base, values] = load_study(tau_o);
            const auto s = fedsea::tau_study(base, values, {tau_o.threads});
            fedsea::emit_tau(s, tau_o.out, tau_o.plots == "on");
            for (const auto& r : s.rows)
                std::cout << "tau=" << r.value << (r.value == s.tau_star ? "*" : "") << " regret " << r.regret << " +- "
                          << r.std_error << " ratio " << r.ratio << " rounds " << r.reference << "\n";
        } else if (*audit) {
            auto config = fedsea::load_config(audit_o.config);
            apply_overrides(config, audit_o);
            const auto a = fedsea::run_audit(config, audit_states, {audit_o.threads});
            fedsea::emit_audit(a, audit_o.out, audit_o.plots == "on");
            for (const auto& v : a.lemma2)
                std::cout << "lemma2 t=" << v.t << " estimate " << v.estimate << " +- " << v.std_error << " rhs " << v.rhs
                          << (v.pass ? " pass" : " FAIL") << "\n";
            std::cout << "lemma1 " << (a.run.bounds.lemma1->pass ? "pass" : "FAIL") << "\n";
            if (a.run.bounds.lemma3)
                std::cout << "lemma3 " << (a.run.bounds.lemma3->pass ? "pass" : "FAIL") << " lhs " << a.run.bounds.lemma3->lhs
                          << " rhs " << a.run.bounds.lemma3->rhs << "\n";
            if (!a.pass) throw fedsea::AuditFailure("lemma audit failed");
        } else if (*self) {
            fedsea::selftest::SuiteOptions opts;
            if (self_o.replicates) opts.replicates = *self_o.replicates;
            if (self_o.seed) opts.seed = *self_o.seed;
            opts.threads = self_o.threads;
            opts.scratch = std::filesystem::path(self_o.out) / "selftest";
            fedsea::selftest::Suite suite(opts);
            bool ok = true;
            suite.run_all([&](const auto& r) {
                std::cout << fedsea::selftest::format_line(r) << std::endl;
                ok = ok && r.pass;
            });
            if (!ok) throw fedsea::AuditFailure("acceptance suite failed");
        }
    } catch (const fedsea::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
