#pragma once

#include <array>
#include <complex>
#include <string>

#include "dtn/vec.hpp"

namespace dtn {

using Complex = std::complex<double>;

enum class KernelFamily { laplace2d, helmholtz2d, helmholtz3d };

/// Fundamental solution selector. `k` is the wavenumber for the Helmholtz
/// families and ignored for Laplace.
struct KernelSpec {
  KernelFamily family = KernelFamily::laplace2d;
  double k = 0.0;

  static KernelSpec laplace() { return {}; }
  static KernelSpec helmholtz2d(double k) { return {KernelFamily::helmholtz2d, k}; }
  static KernelSpec helmholtz3d(double k) { return {KernelFamily::helmholtz3d, k}; }

  int dimension() const { return family == KernelFamily::helmholtz3d ? 3 : 2; }
  bool is_helmholtz() const { return family != KernelFamily::laplace2d; }
};

void validate(const KernelSpec& spec);

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& s);

/// G(x, y):
///   laplace2d   -ln|x-y| / (2π)
///   helmholtz2d (i/4) H0(k|x-y|) = (-Y0/4, J0/4)
///   helmholtz3d exp(ik|x-y|) / (4π|x-y|)
/// Throws SingularEvaluationError when x == y.
Complex kernel_value(const KernelSpec& spec, const Vec3& x, const Vec3& y);

/// ∇_y G(x, y), one complex value per coordinate (z is zero in 2D).
std::array<Complex, 3> kernel_gradient_y(const KernelSpec& spec, const Vec3& x, const Vec3& y);

/// ∂G(x, y)/∂n_y = ∇_y G · n.
Complex kernel_normal_derivative(const KernelSpec& spec, const Vec3& x, const Vec3& y, const Vec3& n);

}  // namespace dtn
