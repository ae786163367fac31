#include "dtn/kernels.hpp"

#include <cmath>
#include <numbers>

#include "dtn/bessel.hpp"
#include "dtn/error.hpp"

namespace dtn {

namespace {

double separation(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  const Vec3 d = y - x;
  const double r = spec.dimension() == 2 ? std::hypot(d.x, d.y) : norm(d);
  if (r == 0.0) throw SingularEvaluationError("kernel evaluated at coincident points");
  return r;
}

}  // namespace

void validate(const KernelSpec& spec) {
  if (spec.is_helmholtz() && !(spec.k > 0.0)) {
    throw ConfigError("Helmholtz kernels need a positive wavenumber");
  }
}

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::laplace2d:
      return "laplace2d";
    case KernelFamily::helmholtz2d:
      return "helmholtz2d";
    case KernelFamily::helmholtz3d:
      return "helmholtz3d";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "laplace2d" || s == "laplace" || s == "poisson") return KernelFamily::laplace2d;
  if (s == "helmholtz2d" || s == "helmholtz") return KernelFamily::helmholtz2d;
  if (s == "helmholtz3d") return KernelFamily::helmholtz3d;
  throw ConfigError("unknown kernel family '" + s + "'");
}

Complex kernel_value(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  const double r = separation(spec, x, y);
  switch (spec.family) {
    case KernelFamily::laplace2d:
      return {-std::log(r) / (2.0 * std::numbers::pi), 0.0};
    case KernelFamily::helmholtz2d: {
      const double kr = spec.k * r;
      return {-0.25 * bessel_y0(kr), 0.25 * bessel_j0(kr)};
    }
    case KernelFamily::helmholtz3d: {
      const double kr = spec.k * r;
      const double scale = 1.0 / (4.0 * std::numbers::pi * r);
      return {scale * std::cos(kr), scale * std::sin(kr)};
    }
  }
  return {};
}

std::array<Complex, 3> kernel_gradient_y(const KernelSpec& spec, const Vec3& x, const Vec3& y) {
  const double r = separation(spec, x, y);
  Vec3 d = y - x;
  if (spec.dimension() == 2) d.z = 0.0;
  // radial derivative dG/dr; ∇_y G = dG/dr · (y - x)/r
  Complex dg_dr;
  switch (spec.family) {
    case KernelFamily::laplace2d:
      dg_dr = {-1.0 / (2.0 * std::numbers::pi * r), 0.0};
      break;
    case KernelFamily::helmholtz2d: {
      // d/dr J0(kr) = -k J1(kr), d/dr Y0(kr) = -k Y1(kr)
      const double kr = spec.k * r;
      dg_dr = {0.25 * spec.k * bessel_y1(kr), -0.25 * spec.k * bessel_j1(kr)};
      break;
    }
    case KernelFamily::helmholtz3d: {
      const double kr = spec.k * r;
      const Complex e{std::cos(kr), std::sin(kr)};
      dg_dr = e * Complex{-1.0, kr} / (4.0 * std::numbers::pi * r * r);
      break;
    }
  }
  const Complex s = dg_dr / r;
  return {s * d.x, s * d.y, s * d.z};
}

Complex kernel_normal_derivative(const KernelSpec& spec, const Vec3& x, const Vec3& y, const Vec3& n) {
  const auto g = kernel_gradient_y(spec, x, y);
  return g[0] * n.x + g[1] * n.y + g[2] * n.z;
}

}  // namespace dtn
