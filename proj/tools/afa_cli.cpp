// Command-line front end: runs FSCIL fusion experiments and the built-in
// verification commands.
//
//   afa_cli run --config exp.cfg [--out dir] [--seed s] [--parallel]
//   afa_cli gradcheck [--n 4 --k 3 --j 2 --trials 5 --tolerance 1e-4]
//   afa_cli synth --out features.csv [--config exp.cfg] [--seed s]
//   afa_cli project-test [--seed s] [--count 10000]
//
// Exit codes: 0 success, 1 verification failure or other error,
// 2 config/parse error, 3 protocol error, 4 training failure.

#include <cmath>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "afa/error.hpp"
#include "afa/experiment.hpp"
#include "afa/gradcheck.hpp"
#include "afa/simplex.hpp"

namespace {

struct GlobalOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool parallel = false;
};

afa::ExperimentConfig load_config(const GlobalOptions& opts) {
    afa::ExperimentConfig config =
        opts.config.empty() ? afa::ExperimentConfig{} : afa::ExperimentConfig::from_file(opts.config);
    if (!opts.out.empty()) config.output_dir = opts.out;
    if (opts.seed) config.seeds = {*opts.seed};
    if (opts.parallel) config.parallel = true;
    return config;
}

int cmd_run(const GlobalOptions& opts) {
    if (opts.config.empty()) throw afa::ConfigError("run needs --config");
    const afa::ExperimentConfig config = load_config(opts);
    const auto rows = afa::run_experiment(config);
    std::cout << "wrote " << rows.size() << " rows to " << (config.output_dir / "results.csv").string()
              << '\n';
    return 0;
}

int cmd_gradcheck(afa::GradCheckOptions options, const std::vector<std::string>& kinds,
                  const GlobalOptions& opts) {
    if (opts.seed) options.seed = *opts.seed;
    if (!kinds.empty()) {
        options.kinds.clear();
        for (const auto& k : kinds) options.kinds.push_back(afa::MeanKind::parse(k));
    }
    const auto lines = afa::grad_check(options);
    bool ok = true;
    double worst = 0.0;
    for (const auto& line : lines) {
        std::cout << (line.passed ? "PASS " : "FAIL ") << line.kind.to_string()
                  << " max_rel_err=" << line.max_relative_error << '\n';
        ok = ok && line.passed;
        worst = std::max(worst, line.max_relative_error);
    }
    std::cout << "max relative error " << worst << " (tolerance " << options.tolerance << ")\n";
    return ok ? 0 : 1;
}

int cmd_synth(const GlobalOptions& opts, std::optional<std::size_t> classes) {
    if (opts.out.empty()) throw afa::ConfigError("synth needs --out <file>");
    const afa::ExperimentConfig config = load_config({opts.config, {}, opts.seed, false});
    afa::SyntheticSpec spec = config.synthetic;
    spec.n_class = classes.value_or(config.session.total_classes());
    spec.seed = opts.seed.value_or(config.seeds.front());
    const auto data = afa::generate_synthetic(spec);
    afa::write_feature_file(opts.out, data);
    std::cout << "wrote " << data.samples.size() << " samples to " << opts.out << '\n';
    return 0;
}

// Checks the optimality conditions of a simplex projection: u on the
// simplex and a common shift theta with u_i = v_i - theta on the support
// and v_i <= theta off it.
bool satisfies_kkt(const afa::Vector& v, const afa::Vector& u, double tol) {
    if ((u.array() < 0.0).any() || std::abs(u.sum() - 1.0) > 1e-12) return false;
    double theta = 0.0;
    int support = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (u[i] > 0.0) {
            theta += v[i] - u[i];
            ++support;
        }
    if (support == 0) return false;
    theta /= support;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (u[i] > 0.0 && std::abs(v[i] - u[i] - theta) > tol) return false;
        if (u[i] == 0.0 && v[i] - theta > tol) return false;
    }
    return true;
}

int cmd_project_test(const GlobalOptions& opts, std::size_t count) {
    afa::Rng rng(opts.seed.value_or(0));
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    std::size_t failures = 0, not_idempotent = 0;
    for (std::size_t t = 0; t < count; ++t) {
        afa::Vector v(static_cast<Eigen::Index>(1 + afa::uniform_index(rng, 6)));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = value(rng);
        const afa::Vector u = afa::project_simplex(v);
        if (!satisfies_kkt(v, u, 1e-10)) ++failures;
        if (afa::project_simplex(u) != u) ++not_idempotent;
    }
    std::cout << count << " projections: " << failures << " KKT violations, " << not_idempotent
              << " non-idempotent\n";
    return failures == 0 && not_idempotent == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aggregated f-average fusion for few-shot class-incremental learning"};
    app.require_subcommand(1);

    GlobalOptions opts;
    std::uint64_t seed_value = 0;
    app.add_option("--config", opts.config, "Experiment configuration file");
    app.add_option("--out", opts.out, "Output directory (run) or file (synth)");
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the seed list with a single seed");
    app.add_flag("--parallel", opts.parallel, "Run seeds concurrently");

    auto* run = app.add_subcommand("run", "Run an FSCIL fusion experiment");
    run->fallthrough();

    afa::GradCheckOptions grad;
    std::vector<std::string> grad_kinds;
    auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic AFA gradients with finite differences");
    gradcheck->fallthrough();
    gradcheck->add_option("--n", grad.n, "Classes");
    gradcheck->add_option("--k", grad.k, "Learners");
    gradcheck->add_option("--j", grad.j, "Branches per model");
    gradcheck->add_option("--trials", grad.trials, "Random models per mean kind");
    gradcheck->add_option("--tolerance", grad.tolerance, "Maximum relative error");
    gradcheck->add_option("--kinds", grad_kinds, "Mean kinds (e.g. arithmetic,harmonic:0.5)")->delimiter(',');
    gradcheck->add_flag("--corrupt", grad.corrupt, "Perturb one analytic entry (negative control)");

    std::optional<std::size_t> synth_classes;
    auto* synth = app.add_subcommand("synth", "Write a synthetic feature file");
    synth->fallthrough();
    synth->add_option("--classes", synth_classes, "Number of classes (default: protocol total)");

    std::size_t project_count = 10000;
    auto* project = app.add_subcommand("project-test", "Self-test of the simplex projection");
    project->fallthrough();
    project->add_option("--count", project_count, "Random vectors to project");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (*seed_opt) opts.seed = seed_value;

    try {
        if (*run) return cmd_run(opts);
        if (*gradcheck) return cmd_gradcheck(grad, grad_kinds, opts);
        if (*synth) return cmd_synth(opts, synth_classes);
        if (*project) return cmd_project_test(opts, project_count);
    } catch (const afa::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const afa::ProtocolError& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return 3;
    } catch (const afa::TrainingError& e) {
        std::cerr << "training failed: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
