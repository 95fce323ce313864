#include "symvs/types.hpp"

#include <cmath>

namespace symvs {

Plane Image::luminance() const {
  Plane out = Plane::Zero(rows(), cols());
  for (const Plane& c : channels) out += c;
  if (!channels.empty()) out /= static_cast<double>(channels.size());
  return out;
}

DepthMap DepthMap::from_values(Plane v) {
  Mask m = v.unaryExpr([](double d) { return std::isfinite(d) && d > 0.0; });
  return DepthMap(std::move(v), std::move(m));
}

Plane canonical_sum(std::span<const Plane> parts) {
  if (parts.empty()) return Plane();
  Plane out(parts[0].rows(), parts[0].cols());
  std::vector<double> buf(parts.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    for (std::size_t k = 0; k < parts.size(); ++k) buf[k] = parts[k].data()[i];
    std::sort(buf.begin(), buf.end());
    double s = 0.0;
    for (double v : buf) s += v;
    out.data()[i] = s;
  }
  return out;
}

}  // namespace symvs
