#pragma once

#include <Eigen/Dense>

namespace linkrec {

// Row-major dense f64 matrix: the carrier for adjacency, features, weights.
using Mat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline bool all_finite(const Mat& m) { return m.allFinite(); }

void require_finite(const Mat& m, const char* where);

inline Mat symmetrized(const Mat& m) { return 0.5 * (m + m.transpose()); }

}  // namespace linkrec
