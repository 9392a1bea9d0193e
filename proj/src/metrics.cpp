#include "lbps/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lbps/error.hpp"

namespace lbps {

namespace {

void check_pair(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y, Index min_len) {
  if (x.size() != y.size()) throw InvalidArgument("metric inputs differ in length", "length_mismatch");
  if (x.size() < min_len) {
    throw InvalidArgument("metric needs at least " + std::to_string(min_len) + " elements",
                          "too_short");
  }
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("metric inputs must be finite");
}

}  // namespace

double plcc(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  check_pair(x, y, 3);
  const Vector xc = x.array() - x.mean();
  const Vector yc = y.array() - y.mean();
  const double sxx = xc.squaredNorm();
  const double syy = yc.squaredNorm();
  if (sxx == 0.0 || syy == 0.0) {
    throw InvalidArgument("correlation of a constant vector is undefined", "degenerate_input");
  }
  return std::clamp(xc.dot(yc) / std::sqrt(sxx * syy), -1.0, 1.0);
}

Vector fractional_ranks(const Eigen::Ref<const Vector>& x) {
  const Index n = x.size();
  std::vector<Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return x(a) < x(b); });
  Vector ranks(n);
  for (Index s = 0; s < n;) {
    Index e = s;
    while (e + 1 < n && x(idx[e + 1]) == x(idx[s])) ++e;
    const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
    for (Index k = s; k <= e; ++k) ranks(idx[k]) = avg;
    s = e + 1;
  }
  return ranks;
}

double srocc(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  check_pair(x, y, 3);
  return plcc(fractional_ranks(x), fractional_ranks(y));
}

double rmse(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
  check_pair(x, y, 1);
  return std::sqrt((x - y).squaredNorm() / static_cast<double>(x.size()));
}

}  // namespace lbps
