#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "afa/afa_model.hpp"
#include "afa/error.hpp"

// Text format:
//   afa N=<n> K=<k> J=<j> activation=<softmax|identity> kinds=<kind>,<kind>,...
//   W <j>            followed by N rows of K*N values, once per branch
//   A                followed by N rows of N*J values
// Values are written with 17 significant digits.

namespace afa {

namespace {

void write_matrix(std::ostream& out, const Matrix& m) {
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), m(r, c),
                                           std::chars_format::general, 17);
            if (c) out << ' ';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    if (!std::getline(in, line)) throw InputError(std::string("model file truncated before ") + what);
    return line;
}

Matrix read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string line = next_line(in, "end of matrix");
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (Eigen::Index c = 0; c < cols; ++c) {
            while (p < end && *p == ' ') ++p;
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(p, end, v);
            if (ec != std::errc())
                throw InputError("model file: bad value in row " + std::to_string(r));
            m(r, c) = v;
            p = ptr;
        }
    }
    return m;
}

std::size_t header_size(const std::string& token, const std::string& key) {
    if (token.rfind(key + "=", 0) != 0) throw InputError("model header: expected " + key);
    return std::stoul(token.substr(key.size() + 1));
}

}  // namespace

void AfaNetwork::save(std::ostream& out) const {
    out << "afa N=" << n_ << " K=" << k_ << " J=" << branches_.size()
        << " activation=" << to_string(activation_) << " kinds=";
    for (std::size_t j = 0; j < branches_.size(); ++j)
        out << (j ? "," : "") << branches_[j].kind.to_string();
    out << '\n';
    for (std::size_t j = 0; j < branches_.size(); ++j) {
        out << "W " << j << '\n';
        write_matrix(out, branches_[j].weights);
    }
    out << "A\n";
    write_matrix(out, aggregation_);
}

AfaNetwork AfaNetwork::load(std::istream& in) {
    std::istringstream header(next_line(in, "header"));
    std::string magic, tn, tk, tj, tact, tkinds;
    header >> magic >> tn >> tk >> tj >> tact >> tkinds;
    if (magic != "afa") throw InputError("not an AFA model file");
    const std::size_t n = header_size(tn, "N");
    const std::size_t k = header_size(tk, "K");
    const std::size_t j_count = header_size(tj, "J");
    if (tact.rfind("activation=", 0) != 0 || tkinds.rfind("kinds=", 0) != 0)
        throw InputError("model header: expected activation= and kinds=");
    const Activation activation = parse_activation(tact.substr(11));

    std::vector<MeanKind> kinds;
    std::istringstream kind_list(tkinds.substr(6));
    for (std::string item; std::getline(kind_list, item, ',');) kinds.push_back(MeanKind::parse(item));
    if (kinds.size() != j_count) throw InputError("model header: kinds do not match J");

    const auto rows = static_cast<Eigen::Index>(n);
    std::vector<FAverageBranch> branches;
    for (std::size_t j = 0; j < j_count; ++j) {
        if (next_line(in, "branch block") != "W " + std::to_string(j))
            throw InputError("model file: expected block W " + std::to_string(j));
        branches.push_back({kinds[j], read_matrix(in, rows, rows * static_cast<Eigen::Index>(k))});
    }
    if (next_line(in, "aggregation block") != "A") throw InputError("model file: expected block A");
    Matrix a = read_matrix(in, rows, rows * static_cast<Eigen::Index>(j_count));
    return AfaNetwork(std::move(branches), std::move(a), activation);
}

}  // namespace afa
