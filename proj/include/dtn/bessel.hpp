#pragma once

namespace dtn {

enum class BesselKind { J, Y };

/// Argument at which evaluation switches from the power series to the
/// large-argument Hankel expansion.
inline constexpr double kBesselSwitch = 12.0;

/// J_n or Y_n for n in {0, 1}. J accepts x >= 0, Y requires x > 0.
/// Throws SingularEvaluationError on a domain violation.
double bessel(BesselKind kind, int order, double x);

double bessel_j0(double x);
double bessel_j1(double x);
double bessel_y0(double x);
double bessel_y1(double x);

}  // namespace dtn
