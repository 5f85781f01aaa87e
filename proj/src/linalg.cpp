#include "hjr/linalg.hpp"

#include <cmath>

namespace hjr {

Mat rref(Mat a, double tol, std::vector<Eigen::Index> *pivots)
{
    Eigen::Index row = 0;
    for (Eigen::Index col = 0; col < a.cols() && row < a.rows(); ++col) {
        Eigen::Index best = row;
        for (Eigen::Index r = row + 1; r < a.rows(); ++r) {
            if (std::abs(a(r, col)) > std::abs(a(best, col))) best = r;
        }
        if (std::abs(a(best, col)) <= tol) {
            a.block(row, col, a.rows() - row, 1).setZero();
            continue;
        }
        a.row(row).swap(a.row(best));
        a.row(row) /= a(row, col);
        a(row, col) = 1.0;
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            if (r != row && a(r, col) != 0.0) {
                a.row(r) -= a(r, col) * a.row(row);
                a(r, col) = 0.0;
            }
        }
        if (pivots) pivots->push_back(col);
        ++row;
    }
    return a;
}

int matrix_rank(const Mat &a, double tol)
{
    std::vector<Eigen::Index> pivots;
    rref(a, tol, &pivots);
    return static_cast<int>(pivots.size());
}

Mat left_null_space(const Mat &g, double tol)
{
    const Eigen::Index n = g.rows();
    if (g.cols() == 0) return Mat::Identity(n, n);
    std::vector<Eigen::Index> pivots;
    const Mat r = rref(g.transpose(), tol, &pivots);
    std::vector<bool> is_pivot(static_cast<std::size_t>(n), false);
    for (auto p : pivots) is_pivot[static_cast<std::size_t>(p)] = true;

    Mat basis(n - static_cast<Eigen::Index>(pivots.size()), n);
    Eigen::Index b = 0;
    for (Eigen::Index free = 0; free < n; ++free) {
        if (is_pivot[static_cast<std::size_t>(free)]) continue;
        Vec v = Vec::Zero(n);
        v(free) = 1.0;
        for (std::size_t i = 0; i < pivots.size(); ++i) v(pivots[i]) = -r(static_cast<Eigen::Index>(i), free);
        basis.row(b++) = v.transpose();
    }
    if (basis.rows() == 0) return basis;
    return rref(basis, tol);
}

double max_abs(const Mat &a) { return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff(); }

} // namespace hjr
