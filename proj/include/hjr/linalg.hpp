#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace hjr {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline Vec to_vec(std::span<const double> v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline std::vector<double> to_std(const Vec &v) { return {v.data(), v.data() + v.size()}; }

// Reduced row echelon form with partial pivoting; pivot columns are appended
// to `pivots` when non-null.
Mat rref(Mat a, double tol = 1e-12, std::vector<Eigen::Index> *pivots = nullptr);

int matrix_rank(const Mat &a, double tol = 1e-12);

// Rows form a basis of {v : vᵀ·g = 0}, in reduced row echelon form.
Mat left_null_space(const Mat &g, double tol = 1e-12);

// Largest absolute entry, zero for empty matrices.
double max_abs(const Mat &a);

} // namespace hjr
