#pragma once

#include "afa/means.hpp"

namespace afa {

/// Euclidean projection onto the unit simplex {u >= 0, sum(u) = 1}.
///
/// Sorting-based threshold search: with v sorted in decreasing order, the
/// support size rho is the largest index for which
/// v_rho - (sum_{i<=rho} v_i - 1) / rho > 0, and u = max(v - theta, 0).
/// Points that already lie on the simplex (up to rounding of their sum) are
/// returned untouched, which makes the projection exactly idempotent.
Vector project_simplex(const Vector& v);

/// project_simplex on every row. Errors name the row.
Matrix project_rows(const Matrix& m);

/// Component-wise max(m, 0).
Matrix clamp_nonneg(const Matrix& m);

/// True when every entry is >= 0 and every row sums to 1 within tol.
bool is_row_stochastic(const Matrix& m, double tol = 1e-9);

}  // namespace afa
