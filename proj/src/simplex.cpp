#include "afa/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "afa/error.hpp"

namespace afa {

namespace {

bool on_simplex(const Vector& v) {
    if ((v.array() < 0.0).any()) return false;
    const double tol = 4.0 * static_cast<double>(v.size()) * std::numeric_limits<double>::epsilon();
    return std::abs(v.sum() - 1.0) <= tol;
}

}  // namespace

Vector project_simplex(const Vector& v) {
    if (v.size() == 0) throw InputError("project_simplex: empty vector");
    if (!v.allFinite()) throw InputError("project_simplex: non-finite entry");
    if (on_simplex(v)) return v;

    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cumulative += sorted[i];
        const double candidate = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (sorted[i] - candidate > 0.0) theta = candidate;
    }
    // v - theta cancels badly for large entries; rescaling brings the sum back
    // within the on_simplex tolerance so a second projection is a no-op.
    Vector u = (v.array() - theta).cwiseMax(0.0).matrix();
    return u / u.sum();
}

Matrix project_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        try {
            out.row(r) = project_simplex(m.row(r).transpose()).transpose();
        } catch (const InputError& e) {
            throw InputError("row " + std::to_string(r) + ": " + e.what());
        }
    }
    return out;
}

Matrix clamp_nonneg(const Matrix& m) { return m.cwiseMax(0.0); }

bool is_row_stochastic(const Matrix& m, double tol) {
    if ((m.array() < 0.0).any()) return false;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        if (std::abs(m.row(r).sum() - 1.0) > tol) return false;
    return true;
}

}  // namespace afa
