#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtn/geometry.hpp"
#include "dtn/kernels.hpp"
#include "dtn/linear_operator.hpp"
#include "dtn/quadrature.hpp"

namespace dtn {

enum class BoundaryCondition : std::uint8_t { dirichlet, neumann };

/// Boundary condition type of each unit-square edge Γ1..Γ4 (counterclockwise
/// from (0,0)).
struct MixedPartition {
  std::array<BoundaryCondition, 4> segments{BoundaryCondition::dirichlet, BoundaryCondition::dirichlet,
                                            BoundaryCondition::dirichlet, BoundaryCondition::dirichlet};

  /// Γ_D = the listed 1-based edges, Γ_N = the rest.
  static MixedPartition dirichlet_on(std::initializer_list<int> edges);
  /// Text form "D,N,N,N".
  static MixedPartition parse(const std::string& text);
  std::string to_string() const;

  /// Throws ConfigError when `mixed` is set and one of the two types is absent.
  void validate(bool mixed) const;
  std::vector<bool> dirichlet_mask(const BoundaryGrid& grid) const;
};

enum class PointFlag : std::uint8_t { ok = 0, near_boundary = 1, outside = 2 };

/// Uniform resolution × resolution grid over the domain's bounding box.
/// Points outside the domain are `outside`; interior points closer than
/// `margin` to the boundary are `near_boundary`.
struct EvaluationGrid {
  std::vector<Vec3> points;
  std::vector<PointFlag> flags;

  std::vector<std::size_t> interior_indices() const;
};

EvaluationGrid make_evaluation_grid(const DomainSpec& domain, std::size_t resolution = 100, double margin = 0.05);

struct SolutionField {
  std::vector<Vec3> points;
  std::vector<PointFlag> flags;
  std::vector<Complex> predicted;  // NaN at outside points
  std::vector<double> exact;       // empty when unknown
  /// Relative L2 error over `ok` points, and over all interior points.
  double error = 0.0;
  double error_all_interior = 0.0;
  /// ‖Im u‖ / ‖u‖ over `ok` points.
  double imaginary_ratio = 0.0;
};

/// ‖pred - exact‖₂ / ‖exact‖₂. Throws UndefinedMetricError when ‖exact‖ = 0.
double relative_l2(std::span<const double> pred, std::span<const double> exact);

/// Domain, boundary grid, evaluation grid and the precomputed boundary
/// integral for one kernel; shared by every pipeline below.
class SolverContext {
 public:
  SolverContext(KernelSpec kernel, DomainSpec domain, BoundaryGrid grid, EvaluationGrid eval);

  const KernelSpec& kernel() const { return kernel_; }
  const DomainSpec& domain() const { return domain_; }
  const BoundaryGrid& grid() const { return grid_; }
  const EvaluationGrid& eval() const { return eval_; }
  const Reconstructor& reconstructor() const { return recon_; }
  const std::vector<std::size_t>& interior() const { return interior_; }

  /// Interior field from complete traces, with errors against `exact` when given.
  SolutionField field(std::span<const double> g, std::span<const double> h,
                      const std::function<double(const Vec3&)>& exact = {}) const;

 private:
  KernelSpec kernel_;
  DomainSpec domain_;
  BoundaryGrid grid_;
  EvaluationGrid eval_;
  std::vector<std::size_t> interior_;
  Reconstructor recon_;
};

/// Dirichlet-to-Neumann prediction. Laplace operators see g - g[ref]; the
/// operator is linear, so no rescaling is needed at inference.
std::vector<double> predict_neumann(const LinearBoundaryOperator& op, std::span<const double> g);

struct DirichletSolution {
  SolutionField field;
  std::vector<double> h;
};

DirichletSolution solve_dirichlet(const LinearBoundaryOperator& op, const SolverContext& ctx,
                                  std::span<const double> g, const std::function<double(const Vec3&)>& exact = {});

struct MixedSolution {
  SolutionField field;
  std::vector<double> g;  // complete traces after merging
  std::vector<double> h;
};

/// `g` is read on Γ_D points only and `h` on Γ_N points only; both have the
/// full grid length.
MixedSolution solve_mixed(const LinearBoundaryOperator& op, const SolverContext& ctx, const std::vector<bool>& dirichlet,
                          std::span<const double> g, std::span<const double> h,
                          const std::function<double(const Vec3&)>& exact = {});

/// Δu = f with u = g on ∂Ω, via u = u_f + u_g where u_f = σ·N[f] and u_g
/// solves the Laplace problem with data g - u_f.
DirichletSolution solve_poisson(const LinearBoundaryOperator& op, const SolverContext& ctx,
                                const VolumeQuadrature& quad, const ScalarField& f, std::span<const double> g,
                                const std::function<double(const Vec3&)>& exact = {});

/// Throws ConfigError when the operator was trained for a different k.
DirichletSolution solve_helmholtz(const LinearBoundaryOperator& op, const SolverContext& ctx, double k,
                                  std::span<const double> g, const std::function<double(const Vec3&)>& exact = {});

struct BoundaryPrediction {
  std::vector<double> h;
  double rel_error = 0.0;
};

BoundaryPrediction predict_normal_derivative_3d(const LinearBoundaryOperator& op, const BoundaryGrid& grid,
                                                std::span<const double> g, std::span<const double> h_exact);

/// Closed-form test solution.
struct TestCase {
  std::string family;
  std::vector<double> params;
  std::function<double(const Vec3&)> u;
  std::function<Vec3(const Vec3&)> grad;
  /// Δu (zero for harmonic and Helmholtz families).
  std::function<double(const Vec3&)> laplacian;

  std::vector<double> dirichlet(const BoundaryGrid& grid) const;
  std::vector<double> neumann(const BoundaryGrid& grid) const;
};

/// Families: u1..u5 (Laplace), helm-sinsin and helm-sinsinh (need k),
/// poisson-quadratic ((x²+y²)/4) and poisson-quintic (x⁵+y), helm3d-plane
/// (sin(√0.2x + √0.3y + √0.5z), k = 1). Random families draw `count` cases
/// from Rng(seed); fixed families return one case.
std::vector<TestCase> make_test_suite(const std::string& family, const DomainSpec& domain, std::uint64_t seed,
                                      std::size_t count = 10, std::optional<double> k = std::nullopt);

std::vector<std::string> laplace_families();

/// CSV `x,y,u_pred_re,u_pred_im,u_exact,abs_err,flag`.
void write_field_csv(std::ostream& out, const SolutionField& field);

}  // namespace dtn
