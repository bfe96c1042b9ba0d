#pragma once

#include <array>
#include <span>

namespace hepforest::kinematics {

// Energies and momenta in GeV, angles in radians.
struct FourMomentum {
  double px = 0.0;
  double py = 0.0;
  double pz = 0.0;
  double energy = 0.0;

  FourMomentum& operator+=(const FourMomentum& o) {
    px += o.px;
    py += o.py;
    pz += o.pz;
    energy += o.energy;
    return *this;
  }
  friend FourMomentum operator+(FourMomentum a, const FourMomentum& b) { return a += b; }
};

using Vec2 = std::array<double, 2>;
using Vec3 = std::array<double, 3>;

// Mass-square values in [-kMassSquareTolerance, 0) are clamped to zero.
inline constexpr double kMassSquareTolerance = 1e-9;

// -ln(tan(theta/2)) for theta in the open interval (0, pi).
double pseudorapidity(double theta);

double transverse_momentum(double px, double py);

// (pt cos(phi), pt sin(phi), pt sinh(eta)); pt must be >= 0.
Vec3 momentum_from_detector(double pt, double eta, double phi);

double invariant_mass(const FourMomentum& p);

// Negated vector sum of the visible transverse momenta.
Vec2 missing_transverse_momentum(std::span<const Vec2> visible);

}  // namespace hepforest::kinematics
