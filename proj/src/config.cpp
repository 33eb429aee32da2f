#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "afa/error.hpp"
#include "afa/experiment.hpp"

namespace afa {

namespace {

const std::vector<std::string> kStrategies = {"arithmetic", "geometric", "harmonic",
                                              "power",      "majority",  "shallow_nn",
                                              "deep_nn",    "weighted_avg_nn", "afa",
                                              "base_only"};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream ss(value);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw ConfigError("invalid number '" + value + "'");
    return out;
}

bool parse_bool(const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("invalid boolean '" + value + "'");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"session.n_class_base", [](auto& c, auto& v) { c.session.n_class_base = parse_number<std::size_t>(v); }},
        {"session.n_way", [](auto& c, auto& v) { c.session.n_way = parse_number<std::size_t>(v); }},
        {"session.n_shots", [](auto& c, auto& v) { c.session.n_shots = parse_number<std::size_t>(v); }},
        {"session.k_total", [](auto& c, auto& v) { c.session.k_total = parse_number<std::size_t>(v); }},
        {"session.threshold", [](auto& c, auto& v) { c.session.threshold = parse_number<double>(v); }},
        {"data.source",
         [](auto& c, auto& v) {
             if (v == "synthetic") c.source = DataSource::Synthetic;
             else if (v == "file") c.source = DataSource::File;
             else throw ConfigError("data.source must be synthetic or file");
         }},
        {"data.path", [](auto& c, auto& v) { c.feature_file = v; }},
        {"data.dim", [](auto& c, auto& v) { c.synthetic.dim = parse_number<std::size_t>(v); }},
        {"data.per_class_train", [](auto& c, auto& v) { c.synthetic.per_class_train = parse_number<std::size_t>(v); }},
        {"data.per_class_test", [](auto& c, auto& v) { c.synthetic.per_class_test = parse_number<std::size_t>(v); }},
        {"data.spread", [](auto& c, auto& v) { c.synthetic.spread = parse_number<double>(v); }},
        {"data.min_angle_deg", [](auto& c, auto& v) { c.synthetic.min_angle_deg = parse_number<double>(v); }},
        {"fusion.strategies", [](auto& c, auto& v) { c.strategies = split_list(v); }},
        {"fusion.epsilon", [](auto& c, auto& v) { c.fusion_epsilon = parse_number<double>(v); }},
        {"fusion.power_q", [](auto& c, auto& v) { c.fusion_power_q = parse_number<double>(v); }},
        {"afa.branches",
         [](auto& c, auto& v) {
             c.afa_branches.clear();
             for (const auto& item : split_list(v)) c.afa_branches.push_back(MeanKind::parse(item));
         }},
        {"afa.activation", [](auto& c, auto& v) { c.afa_activation = parse_activation(v); }},
        {"train.learning_rate", [](auto& c, auto& v) { c.train.learning_rate = parse_number<double>(v); }},
        {"train.epochs", [](auto& c, auto& v) { c.train.epochs = parse_number<std::size_t>(v); }},
        {"train.batch_size", [](auto& c, auto& v) { c.train.batch_size = parse_number<std::size_t>(v); }},
        {"train.beta1", [](auto& c, auto& v) { c.train.beta1 = parse_number<double>(v); }},
        {"train.beta2", [](auto& c, auto& v) { c.train.beta2 = parse_number<double>(v); }},
        {"prototype.tau", [](auto& c, auto& v) { c.tau = parse_number<double>(v); }},
        {"prototype.fit_temperature", [](auto& c, auto& v) { c.fit_temperature = parse_bool(v); }},
        {"prototype.tau_min", [](auto& c, auto& v) { c.tau_grid.min = parse_number<double>(v); }},
        {"prototype.tau_max", [](auto& c, auto& v) { c.tau_grid.max = parse_number<double>(v); }},
        {"prototype.tau_points", [](auto& c, auto& v) { c.tau_grid.points = parse_number<std::size_t>(v); }},
        {"run.seeds",
         [](auto& c, auto& v) {
             c.seeds.clear();
             for (const auto& item : split_list(v)) c.seeds.push_back(parse_number<std::uint64_t>(item));
         }},
        {"run.parallel", [](auto& c, auto& v) { c.parallel = parse_bool(v); }},
        {"output.dir", [](auto& c, auto& v) { c.output_dir = v; }},
    };
    return table;
}

}  // namespace

bool is_known_strategy(const std::string& name) {
    return std::find(kStrategies.begin(), kStrategies.end(), name) != kStrategies.end();
}

ExperimentConfig ExperimentConfig::parse(std::istream& in, const std::string& source_name) {
    ExperimentConfig config;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text.front() == '#') continue;
        const std::string where = source_name + ":" + std::to_string(line_no) + ": ";
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key=value");
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            it->second(config, value);
        } catch (const Error& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    return config;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse(in, path.string());
}

void ExperimentConfig::validate() const {
    try {
        session.validate();
        train.validate();
        MeanKind::geometric(fusion_epsilon);
        MeanKind::power(fusion_power_q);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    if (strategies.empty()) throw ConfigError("fusion.strategies: at least one strategy is required");
    for (const auto& s : strategies)
        if (!is_known_strategy(s)) throw ConfigError("fusion.strategies: unknown strategy '" + s + "'");
    if (std::set<std::string>(strategies.begin(), strategies.end()).size() != strategies.size())
        throw ConfigError("fusion.strategies: duplicate strategy");
    if (seeds.empty()) throw ConfigError("run.seeds: at least one seed is required");
    if (afa_branches.empty()) throw ConfigError("afa.branches: at least one branch is required");
    if (source == DataSource::File && feature_file.empty())
        throw ConfigError("data.path is required when data.source=file");
    if (!(tau > 0.0)) throw ConfigError("prototype.tau must be positive");
    if (!(tau_grid.min > 0.0 && tau_grid.max > tau_grid.min && tau_grid.points >= 2))
        throw ConfigError("prototype temperature grid is invalid");
    if (std::find(strategies.begin(), strategies.end(), "afa") != strategies.end() &&
        afa_activation != Activation::Softmax)
        throw ConfigError("afa.activation must be softmax for classification training");
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    auto join = [](const auto& items, auto to_str) {
        std::string s;
        for (const auto& item : items) s += (s.empty() ? "" : ",") + to_str(item);
        return s;
    };
    out << "session.n_class_base=" << session.n_class_base << '\n'
        << "session.n_way=" << session.n_way << '\n'
        << "session.n_shots=" << session.n_shots << '\n'
        << "session.k_total=" << session.k_total << '\n'
        << "session.threshold=" << fmt(session.threshold) << '\n'
        << "data.source=" << (source == DataSource::Synthetic ? "synthetic" : "file") << '\n';
    if (source == DataSource::File) out << "data.path=" << feature_file.string() << '\n';
    out << "data.dim=" << synthetic.dim << '\n'
        << "data.per_class_train=" << synthetic.per_class_train << '\n'
        << "data.per_class_test=" << synthetic.per_class_test << '\n'
        << "data.spread=" << fmt(synthetic.spread) << '\n'
        << "data.min_angle_deg=" << fmt(synthetic.min_angle_deg) << '\n'
        << "fusion.strategies=" << join(strategies, [](const std::string& s) { return s; }) << '\n'
        << "fusion.epsilon=" << fmt(fusion_epsilon) << '\n'
        << "fusion.power_q=" << fmt(fusion_power_q) << '\n'
        << "afa.branches=" << join(afa_branches, [](const MeanKind& k) { return k.to_string(); }) << '\n'
        << "afa.activation=" << to_string(afa_activation) << '\n'
        << "train.learning_rate=" << fmt(train.learning_rate) << '\n'
        << "train.epochs=" << train.epochs << '\n'
        << "train.batch_size=" << train.batch_size << '\n'
        << "train.beta1=" << fmt(train.beta1) << '\n'
        << "train.beta2=" << fmt(train.beta2) << '\n'
        << "prototype.tau=" << fmt(tau) << '\n'
        << "prototype.fit_temperature=" << (fit_temperature ? "true" : "false") << '\n'
        << "prototype.tau_min=" << fmt(tau_grid.min) << '\n'
        << "prototype.tau_max=" << fmt(tau_grid.max) << '\n'
        << "prototype.tau_points=" << tau_grid.points << '\n'
        << "run.seeds=" << join(seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
        << "run.parallel=" << (parallel ? "true" : "false") << '\n'
        << "output.dir=" << output_dir.string() << '\n';
    return out.str();
}

}  // namespace afa
