#include "afa/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <map>
#include <set>

#include "afa/baselines.hpp"
#include "afa/error.hpp"
#include "afa/metrics.hpp"
#include "afa/rng.hpp"

namespace afa {

namespace {

constexpr std::uint64_t kDataTag = 1;
constexpr std::uint64_t kSplitTag = 2;
constexpr std::uint64_t kTrainTag = 3;

FeatureDataset load_dataset(const ExperimentConfig& config, std::uint64_t seed) {
    if (config.source == DataSource::File) return read_feature_file(config.feature_file);
    SyntheticSpec spec = config.synthetic;
    spec.n_class = config.session.total_classes();
    spec.seed = mix_seed(seed, kDataTag);
    return generate_synthetic(spec);
}

// Predicted class per test sample for one strategy at session k >= 2.
std::vector<std::size_t> fuse(const ExperimentConfig& config, const std::string& strategy,
                              const std::vector<Vector>& stacked_test,
                              const std::vector<Vector>& base_probs,
                              const std::vector<LabeledInput>& rehearsal, std::size_t n,
                              std::size_t k, const TrainConfig& train_config,
                              std::optional<AfaNetwork>& trained_afa) {
    std::vector<std::size_t> preds;
    preds.reserve(stacked_test.size());

    auto from_means = [&](const MeanKind& kind) {
        for (const auto& x : stacked_test) preds.push_back(argmax(mean_fusion(kind, unstack(x, n, k))));
    };
    auto from_vectors = [&](const std::vector<Vector>& outputs) {
        for (const auto& p : outputs) preds.push_back(argmax(p));
    };

    if (strategy == "arithmetic") from_means(MeanKind::arithmetic());
    else if (strategy == "geometric") from_means(MeanKind::geometric(config.fusion_epsilon));
    else if (strategy == "harmonic") from_means(MeanKind::harmonic(config.fusion_epsilon));
    else if (strategy == "power") from_means(MeanKind::power(config.fusion_power_q));
    else if (strategy == "majority") {
        for (const auto& x : stacked_test) preds.push_back(majority_vote(unstack(x, n, k)));
    } else if (strategy == "base_only") {
        for (const auto& p : base_probs) preds.push_back(argmax(base_only_predict(p, n)));
    } else if (strategy == "afa") {
        const AfaNetwork init = AfaNetwork::uniform(n, k, config.afa_branches, config.afa_activation);
        auto result = train(init, rehearsal, train_config);
        for (const auto& x : stacked_test) preds.push_back(argmax(result.model.forward(x)));
        trained_afa = std::move(result.model);
    } else if (strategy == "shallow_nn") {
        from_vectors(nn_fuser_train_predict(ShallowNN::matching_afa(n, k, config.afa_branches.size()),
                                            rehearsal, stacked_test, n, k, train_config));
    } else if (strategy == "deep_nn") {
        from_vectors(nn_fuser_train_predict(DeepNN::interpolated(n, k), rehearsal, stacked_test, n, k,
                                            train_config));
    } else if (strategy == "weighted_avg_nn") {
        from_vectors(nn_fuser_train_predict(WeightedAvgNN{}, rehearsal, stacked_test, n, k, train_config));
    } else {
        throw ConfigError("unknown strategy '" + strategy + "'");
    }
    return preds;
}

}  // namespace

SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed) {
    const SessionSpec& spec = config.session;
    const FeatureDataset dataset = load_dataset(config, seed);
    const std::vector<Session> sessions = split_sessions(dataset, spec, mix_seed(seed, kSplitTag));

    std::set<std::size_t> base_classes;
    for (std::size_t c = 0; c < spec.n_class_base; ++c) base_classes.insert(c);

    SeedOutcome outcome;
    std::vector<PrototypeClassifier> classifiers;
    std::map<std::size_t, Vector> memory;

    for (const Session& session : sessions) {
        const std::size_t k = session.index;
        const std::size_t n = spec.class_count(k);

        PrototypeClassifier fresh = fit_prototypes(session.train, k == 1 ? 0 : spec.n_shots, config.tau);
        for (const auto& [c, centroid] : fresh.centroids()) memory[c] = centroid;
        PrototypeClassifier weak = k == 1 ? fresh : classifiers.back().extended_with(fresh);
        weak.set_tau(config.tau);
        if (config.fit_temperature) {
            const TemperatureFit fit = fit_temperature(weak, session.train, config.tau_grid);
            weak.set_tau(fit.tau);
        }
        classifiers.push_back(std::move(weak));

        std::vector<std::size_t> labels;
        std::vector<Vector> stacked_test, base_probs;
        for (const Sample& s : session.test) {
            labels.push_back(s.label);
            base_probs.push_back(classifiers.front().predict_probs(s.feature));
            if (k > 1) stacked_test.push_back(stack_predictions(classifiers, s.feature, n, spec.threshold));
        }

        std::vector<LabeledInput> rehearsal;
        if (k > 1) rehearsal = build_rehearsal_set(memory, classifiers, n, spec.threshold);
        TrainConfig train_config = config.train;
        train_config.seed = mix_seed(mix_seed(seed, kTrainTag), k);

        for (const std::string& strategy : config.strategies) {
            std::vector<std::size_t> preds;
            if (k == 1) {
                // A single learner: nothing to fuse.
                for (const auto& p : base_probs) preds.push_back(argmax(p));
            } else {
                std::optional<AfaNetwork> trained;
                preds = fuse(config, strategy, stacked_test, base_probs, rehearsal, n, k, train_config,
                             trained);
                if (trained && k == spec.k_total) outcome.final_afa = std::move(trained);
            }
            const AccuracyReport acc = accuracy_report(preds, labels, base_classes);
            ReportRow row;
            row.strategy = strategy;
            row.seed = seed;
            row.session = k;
            row.n_classes = n;
            row.f1_macro = f1_macro(preds, labels, n);
            row.acc_mean = acc.acc_mean;
            row.acc_base = acc.acc_base;
            row.acc_new = acc.acc_new;
            outcome.rows.push_back(std::move(row));
        }
    }
    return outcome;
}

std::vector<SeedOutcome> run_all_seeds(const ExperimentConfig& config) {
    config.validate();
    std::vector<SeedOutcome> outcomes;
    if (!config.parallel) {
        for (std::uint64_t seed : config.seeds) outcomes.push_back(run_seed(config, seed));
        return outcomes;
    }
    std::vector<std::future<SeedOutcome>> pending;
    for (std::uint64_t seed : config.seeds)
        pending.push_back(std::async(std::launch::async, [&config, seed] { return run_seed(config, seed); }));
    for (auto& f : pending) outcomes.push_back(f.get());
    return outcomes;
}

std::string format_metric(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 6);
    return std::string(buf, ptr);
}

namespace {

std::string optional_metric(const std::optional<double>& v) { return v ? format_metric(*v) : ""; }

struct Moments {
    std::size_t count = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double v) {
        ++count;
        sum += v;
        sum_sq += v * v;
    }
    std::string mean() const { return count ? format_metric(sum / static_cast<double>(count)) : ""; }
    // Population standard deviation over seeds.
    std::string stddev() const {
        if (!count) return "";
        const double m = sum / static_cast<double>(count);
        return format_metric(std::sqrt(std::max(0.0, sum_sq / static_cast<double>(count) - m * m)));
    }
};

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    return out;
}

}  // namespace

void emit_results(const std::vector<ReportRow>& rows, const std::filesystem::path& dir) {
    if (rows.empty()) throw InputError("emit_results: no rows");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    {
        auto out = open_for_write(dir / "results.csv");
        out << "strategy,seed,session,n_classes,f1_macro,acc_mean,acc_base,acc_new\n";
        for (const auto& r : rows)
            out << r.strategy << ',' << r.seed << ',' << r.session << ',' << r.n_classes << ','
                << format_metric(r.f1_macro) << ',' << format_metric(r.acc_mean) << ','
                << optional_metric(r.acc_base) << ',' << optional_metric(r.acc_new) << '\n';
        if (!out) throw IoError("failed writing " + (dir / "results.csv").string());
    }

    struct Cell {
        std::size_t n_classes = 0;
        Moments f1, acc_mean, acc_base, acc_new;
    };
    std::vector<std::string> order;
    std::map<std::string, std::map<std::size_t, Cell>> cells;
    for (const auto& r : rows) {
        if (!cells.contains(r.strategy)) order.push_back(r.strategy);
        Cell& cell = cells[r.strategy][r.session];
        cell.n_classes = r.n_classes;
        cell.f1.add(r.f1_macro);
        cell.acc_mean.add(r.acc_mean);
        if (r.acc_base) cell.acc_base.add(*r.acc_base);
        if (r.acc_new) cell.acc_new.add(*r.acc_new);
    }
    auto out = open_for_write(dir / "summary.csv");
    out << "strategy,session,n_classes,n_seeds,f1_macro_mean,f1_macro_std,acc_mean_mean,acc_mean_std,"
           "acc_base_mean,acc_base_std,acc_new_mean,acc_new_std\n";
    for (const auto& strategy : order)
        for (const auto& [session, c] : cells[strategy])
            out << strategy << ',' << session << ',' << c.n_classes << ',' << c.f1.count << ','
                << c.f1.mean() << ',' << c.f1.stddev() << ',' << c.acc_mean.mean() << ','
                << c.acc_mean.stddev() << ',' << c.acc_base.mean() << ',' << c.acc_base.stddev() << ','
                << c.acc_new.mean() << ',' << c.acc_new.stddev() << '\n';
    if (!out) throw IoError("failed writing " + (dir / "summary.csv").string());
}

std::vector<ReportRow> run_experiment(const ExperimentConfig& config) {
    const auto outcomes = run_all_seeds(config);
    std::vector<ReportRow> rows;
    for (const auto& o : outcomes) rows.insert(rows.end(), o.rows.begin(), o.rows.end());
    emit_results(rows, config.output_dir);

    {
        auto out = open_for_write(config.output_dir / "config.effective");
        out << config.to_text();
        if (std::find(config.strategies.begin(), config.strategies.end(), "deep_nn") != config.strategies.end()) {
            for (std::size_t k = 2; k <= config.session.k_total; ++k) {
                out << "# deep_nn hidden widths, session " << k << ':';
                for (std::size_t w : DeepNN::interpolated(config.session.class_count(k), k).hidden) out << ' ' << w;
                out << '\n';
            }
        }
    }
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].final_afa) continue;
        auto out = open_for_write(config.output_dir /
                                  ("afa_model_seed" + std::to_string(config.seeds[i]) + ".txt"));
        outcomes[i].final_afa->save(out);
    }
    return rows;
}

}  // namespace afa
