#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

#include "afa/error.hpp"
#include "afa/fscil.hpp"

namespace afa {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, std::size_t line, const std::string& what) {
    throw ParseError(path.string() + ":" + std::to_string(line) + ": " + what);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

}  // namespace

FeatureDataset read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open feature file " + path.string());

    FeatureDataset data;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) fail(path, 1, "missing header");
    ++line_no;
    {
        const auto fields = split_commas(line);
        if (fields.size() != 2 || !fields[0].starts_with("dim=") || !fields[1].starts_with("classes=") ||
            !parse_number(fields[0].substr(4), data.dim) ||
            !parse_number(fields[1].substr(8), data.n_class))
            fail(path, line_no, "header must read dim=<d>,classes=<n>");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != data.dim + 2)
            fail(path, line_no, "expected " + std::to_string(data.dim + 2) + " fields, found " +
                                    std::to_string(fields.size()));
        Sample s;
        if (fields[0] == "train") s.split = Split::Train;
        else if (fields[0] == "test") s.split = Split::Test;
        else fail(path, line_no, "split must be train or test");
        if (!parse_number(fields[1], s.label) || s.label >= data.n_class)
            fail(path, line_no, "bad label '" + std::string(fields[1]) + "'");
        s.feature.resize(static_cast<Eigen::Index>(data.dim));
        for (std::size_t i = 0; i < data.dim; ++i)
            if (!parse_number(fields[i + 2], s.feature[static_cast<Eigen::Index>(i)]) ||
                !std::isfinite(s.feature[static_cast<Eigen::Index>(i)]))
                fail(path, line_no, "bad value in field " + std::to_string(i + 3));
        data.samples.push_back(std::move(s));
    }
    try {
        data.validate();
    } catch (const InputError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return data;
}

void write_feature_file(const std::filesystem::path& path, const FeatureDataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write feature file " + path.string());
    out << "dim=" << dataset.dim << ",classes=" << dataset.n_class << '\n';
    char buf[40];
    for (const auto& s : dataset.samples) {
        out << (s.split == Split::Train ? "train" : "test") << ',' << s.label;
        for (Eigen::Index i = 0; i < s.feature.size(); ++i) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), s.feature[i],
                                           std::chars_format::general, 17);
            out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing feature file " + path.string());
}

}  // namespace afa
