#include "linkrec/matrix.hpp"

#include <cmath>
#include <string>

#include "linkrec/error.hpp"

namespace linkrec {

void require_finite(const Mat& m, const char* where) {
  // squaredNorm is one vectorized pass and goes non-finite whenever the
  // matrix holds a NaN or Inf; it can also overflow for huge finite values,
  // so only the slow exact scan decides failure.
  const double probe = m.squaredNorm();
  if (std::isfinite(probe)) return;
  if (!m.allFinite())
    throw NumericError(std::string("non-finite values in ") + where);
}

}  // namespace linkrec
