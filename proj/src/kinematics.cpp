#include "hepforest/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hepforest::kinematics {

double pseudorapidity(double theta) {
  if (!(theta > 0.0 && theta < std::numbers::pi))
    throw std::domain_error("pseudorapidity: polar angle must lie in (0, pi)");
  return -std::log(std::tan(theta / 2.0));
}

double transverse_momentum(double px, double py) { return std::hypot(px, py); }

Vec3 momentum_from_detector(double pt, double eta, double phi) {
  if (pt < 0.0) throw std::domain_error("momentum_from_detector: negative transverse momentum");
  return {pt * std::cos(phi), pt * std::sin(phi), pt * std::sinh(eta)};
}

double invariant_mass(const FourMomentum& p) {
  const double p2 = p.px * p.px + p.py * p.py + p.pz * p.pz;
  double m2 = p.energy * p.energy - p2;
  if (m2 < 0.0) {
    if (m2 < -kMassSquareTolerance) throw std::domain_error("invariant_mass: spacelike four-momentum");
    m2 = 0.0;
  }
  return std::sqrt(m2);
}

Vec2 missing_transverse_momentum(std::span<const Vec2> visible) {
  Vec2 sum{0.0, 0.0};
  for (const auto& v : visible) {
    sum[0] += v[0];
    sum[1] += v[1];
  }
  return {-sum[0], -sum[1]};
}

}  // namespace hepforest::kinematics
