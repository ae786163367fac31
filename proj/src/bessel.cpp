#include "dtn/bessel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dtn/error.hpp"

namespace dtn {

namespace {

constexpr double kTruncation = 1e-17;
constexpr int kMaxTerms = 200;

// Σ_{m>=0} (-q)^m / (m! (m+order)!), q = x²/4.
double j_series(int order, double x) {
  const double q = 0.25 * x * x;
  double term = order == 0 ? 1.0 : 0.5 * x;
  double sum = term;
  for (int m = 1; m < kMaxTerms; ++m) {
    term *= -q / (static_cast<double>(m) * static_cast<double>(m + order));
    sum += term;
    if (std::abs(term) < kTruncation * std::abs(sum)) break;
  }
  return sum;
}

// Y0 = (2/π)[(ln(x/2) + γ) J0 + Σ_{m>=1} (-1)^{m+1} H_m q^m / (m!)²],
// using ψ(m+1) = -γ + H_m.
double y0_series(double x) {
  const double q = 0.25 * x * x;
  double coeff = 1.0;  // (-q)^m / (m!)²
  double harmonic = 0.0;
  double sum = 0.0;
  for (int m = 1; m < kMaxTerms; ++m) {
    coeff *= -q / (static_cast<double>(m) * static_cast<double>(m));
    harmonic += 1.0 / static_cast<double>(m);
    const double term = -coeff * harmonic;
    sum += term;
    if (std::abs(term) < kTruncation * std::abs(sum)) break;
  }
  return 2.0 / std::numbers::pi *
         ((std::log(0.5 * x) + std::numbers::egamma) * j_series(0, x) + sum);
}

// Y1 = -2/(πx) + (2/π) ln(x/2) J1 - (x/2π) Σ_{k>=0} (ψ(k+1) + ψ(k+2)) (-q)^k / (k!(k+1)!).
double y1_series(double x) {
  const double q = 0.25 * x * x;
  double coeff = 1.0;  // (-q)^k / (k!(k+1)!)
  double h_k = 0.0;    // H_k
  double sum = -2.0 * std::numbers::egamma + 1.0;
  for (int k = 1; k < kMaxTerms; ++k) {
    coeff *= -q / (static_cast<double>(k) * static_cast<double>(k + 1));
    h_k += 1.0 / static_cast<double>(k);
    const double psi_sum = -2.0 * std::numbers::egamma + 2.0 * h_k + 1.0 / static_cast<double>(k + 1);
    const double term = coeff * psi_sum;
    sum += term;
    if (std::abs(term) < kTruncation * std::abs(sum)) break;
  }
  return -2.0 / (std::numbers::pi * x) + 2.0 / std::numbers::pi * std::log(0.5 * x) * j_series(1, x) -
         x / (2.0 * std::numbers::pi) * sum;
}

struct Asymptotic {
  double j;
  double y;
};

// Hankel expansion: amplitude sqrt(2/(πx)), phase χ = x - (n/2 + 1/4)π.
Asymptotic hankel_expansion(int order, double x) {
  const double mu = 4.0 * order * order;
  const double eight_x = 8.0 * x;
  double p = 1.0;
  double q = 0.0;
  double term = 1.0;
  double previous = 1.0;
  for (int k = 1; k < kMaxTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (static_cast<double>(k) * eight_x);
    const double mag = std::abs(term);
    if (mag > previous) break;  // optimal truncation of the divergent series
    if (k % 2 == 0) {
      p += (k / 2) % 2 == 0 ? term : -term;
    } else {
      q += ((k - 1) / 2) % 2 == 0 ? term : -term;
    }
    previous = mag;
    if (mag < kTruncation) break;
  }
  const double chi = x - (0.5 * order + 0.25) * std::numbers::pi;
  const double amp = std::sqrt(2.0 / (std::numbers::pi * x));
  const double c = std::cos(chi);
  const double s = std::sin(chi);
  return {amp * (p * c - q * s), amp * (p * s + q * c)};
}

}  // namespace

double bessel(BesselKind kind, int order, double x) {
  if (order != 0 && order != 1) {
    throw DimensionError("Bessel order must be 0 or 1, got " + std::to_string(order));
  }
  if (kind == BesselKind::J) {
    if (x < 0.0) throw SingularEvaluationError("J_n requires x >= 0");
    if (x <= kBesselSwitch) return j_series(order, x);
    return hankel_expansion(order, x).j;
  }
  if (!(x > 0.0)) throw SingularEvaluationError("Y_n requires x > 0");
  if (x <= kBesselSwitch) return order == 0 ? y0_series(x) : y1_series(x);
  return hankel_expansion(order, x).y;
}

double bessel_j0(double x) { return bessel(BesselKind::J, 0, x); }
double bessel_j1(double x) { return bessel(BesselKind::J, 1, x); }
double bessel_y0(double x) { return bessel(BesselKind::Y, 0, x); }
double bessel_y1(double x) { return bessel(BesselKind::Y, 1, x); }

}  // namespace dtn
