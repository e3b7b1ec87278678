#pragma once

#include <memory>

#include "hce/config.hpp"
#include "hce/expansion.hpp"

namespace fixtures {

inline hce::ProblemData problem(int n, hce::VectorField f, hce::VectorField g, hce::MaterialParams mat = {}) {
  auto mesh = std::make_shared<const hce::Mesh>(
      hce::generate_rect_with_inclusion({0, 0, 1, 1}, {0.25, 0.25, 0.75, 0.75}, n));
  return {mesh, mat, std::move(f), std::move(g)};
}

inline hce::VectorField zero() {
  return [](double, double) { return hce::Vec2{0, 0}; };
}
inline hce::VectorField gravity() {
  return [](double, double) { return hce::Vec2{0, -1}; };
}

/// Unit square, inclusion [0.25, 0.75]^2, nu = 0.25, f = (0, -1), g = 0.
inline hce::DiscretizationPtr default_disc(int n = 16) { return hce::make_discretization(problem(n, gravity(), zero())); }

/// Asymmetric data so that every rigid coefficient is active.
inline hce::DiscretizationPtr generic_disc(int n = 8) {
  hce::MaterialParams mat;
  mat.nu_inclusion = 0.3;
  return hce::make_discretization(problem(
      n, [](double x, double y) { return hce::Vec2{1 + x * y, std::sin(3 * x) - y}; },
      [](double x, double y) { return hce::Vec2{0.1 * x * y, 0.05 * (x - y * y)}; }, mat));
}

inline hce::DiscretizationPtr rigid_disc(int n = 8) {
  return hce::make_discretization(problem(n, zero(), hce::rigid_motion(0.3, -0.7, 0.4, {0.2, 0.6})));
}

inline double max_abs(const hce::Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace fixtures
