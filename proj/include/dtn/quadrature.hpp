#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dtn/geometry.hpp"
#include "dtn/kernels.hpp"

namespace dtn {

/// Symmetric degree-5 rule with seven nodes. Weights sum to 1/2, the area of
/// the reference triangle (0,0), (1,0), (0,1), so integrals are |J| Σ w f.
struct TriangleRule {
  std::array<std::array<double, 3>, 7> barycentric;
  std::array<double, 7> weight;
};

const TriangleRule& seven_point_rule();

using ScalarField = std::function<double(const Vec3&)>;

/// Throws InvalidDomainError when |J| < 1e-14.
double integrate_triangle(const ScalarField& f, const Vec3& v1, const Vec3& v2, const Vec3& v3);
double integrate_mesh(const ScalarField& f, const TriMesh& mesh);

struct SingularIntegralConfig {
  double r0 = 0.01;
};

struct SingularValue {
  double value = 0.0;
  /// x lies within r0 of the mesh boundary, so the excluded disc is clipped.
  bool flagged = false;
};

/// Volume quadrature nodes of a mesh with support for log-singular
/// integrands c·ln|y - x|·f(y).
///
/// Triangles farther from x than their own diameter (and than r0) use the
/// seven-point rule. On the remaining near triangles f is replaced by the
/// quadratic least-squares fit to its seven node values, and the integral
/// over the part outside the r0-disc is computed in polar coordinates about
/// x: closed form in the radius, adaptive Gauss-Legendre along each edge.
/// The part of the disc inside the mesh contributes c·f(x)·∫ ln r, also
/// exact for the clipped disc at boundary points.
class VolumeQuadrature {
 public:
  explicit VolumeQuadrature(const TriMesh& mesh, SingularIntegralConfig cfg = {});

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }
  const SingularIntegralConfig& config() const { return cfg_; }

  /// Field values at every node, in node order.
  std::vector<double> sample(const ScalarField& f) const;

  /// Angle of the mesh around x: 2π inside a triangle, π on a boundary edge,
  /// the corner angle at a boundary vertex, 0 outside.
  double opening_angle(const Vec3& x) const;
  double distance_to_mesh_boundary(const Vec3& x) const;

  /// ∫ c·ln|y - x| f(y) dy with `node_values` = f at the nodes and `fx` = f(x).
  SingularValue log_integral(double c, std::span<const double> node_values, double fx, const Vec3& x) const;

 private:
  SingularIntegralConfig cfg_;
  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Vec3> points_;
  std::vector<double> weights_;
  std::vector<std::array<Vec3, 2>> boundary_edges_;
  std::vector<double> diameter_;
  double max_diameter_ = 0.0;
  Vec3 bucket_origin_{};
  double bucket_size_ = 1.0;
  std::size_t bucket_nx_ = 0, bucket_ny_ = 0;
  std::vector<std::vector<std::uint32_t>> buckets_;

  std::vector<std::uint32_t> near_triangles(const Vec3& x) const;
};

/// Field given by its values at mesh vertices, linear on each triangle.
/// Points outside the mesh take the value of the nearest vertex.
class PiecewiseLinearField {
 public:
  PiecewiseLinearField(const TriMesh& mesh, std::vector<double> vertex_values);
  double operator()(const Vec3& p) const;

 private:
  std::shared_ptr<const TriMesh> mesh_;
  std::vector<double> values_;
};

/// N[f](x) = ∫ G_L(x, y) f(y) dy with G_L = -ln|x-y|/(2π).
SingularValue newton_potential(const VolumeQuadrature& quad, std::span<const double> node_values, double fx,
                               const Vec3& x);
SingularValue newton_potential(const VolumeQuadrature& quad, const ScalarField& f, const Vec3& x);

/// ∫∫ ln((x-x0)² + (y-y0)²) over [0,1]² by splitting the square into
/// triangles with apex x0, integrating r·ln r² in closed form radially and
/// adaptively in angle. x0 must lie in the closed square.
double log_kernel_square_reference(const Vec3& x0, double tol = 1e-14);

struct QuadBenchRow {
  std::string integrand;
  double h = 0.0;
  double computed = 0.0;
  double reference = 0.0;
  double rel_error = 0.0;
};

/// Known integrands: "ln(x2+y2)" (singular corner) and
/// "ln((x-0.5)2+(y-0.5)2)" (singular centre), integrated on the unit square.
QuadBenchRow run_quadbench(const std::string& integrand, double h, SingularIntegralConfig cfg = {});
std::vector<std::string> quadbench_integrands();

/// Σ values_i · weights_i.
double boundary_integral(std::span<const double> values, const BoundaryGrid& grid);
Complex boundary_integral(std::span<const Complex> values, const BoundaryGrid& grid);

/// Global sign σ making σ·∫(g ∂G/∂n - G h) reproduce u for the kernel
/// conventions used here; determined once from the u ≡ 1 self-check.
double representation_sign();

struct Reconstruction {
  Complex value;
  bool near_boundary = false;
};

/// σ·∫_∂Ω [g ∂G(x,y)/∂n_y - G(x,y) h(y)] ds_y.
/// Throws InvalidDomainError when x is not inside the domain; flags points
/// closer than twice the grid spacing to the boundary.
Reconstruction reconstruct_interior(const KernelSpec& kernel, const DomainSpec& domain, const BoundaryGrid& grid,
                                    std::span<const double> g, std::span<const double> h, const Vec3& x);

/// Reconstruction at a fixed set of points, precomputed as one matrix so that
/// many trace pairs are evaluated with a single product.
class Reconstructor {
 public:
  Reconstructor(const KernelSpec& kernel, const DomainSpec& domain, const BoundaryGrid& grid,
                std::vector<Vec3> points);

  const std::vector<Vec3>& points() const { return points_; }
  const std::vector<bool>& near_boundary() const { return near_; }

  std::vector<Complex> evaluate(std::span<const double> g, std::span<const double> h) const;

 private:
  std::vector<Vec3> points_;
  std::vector<bool> near_;
  std::size_t n_ = 0;
  Eigen::MatrixXcd matrix_;  // points × 2n, acting on [g; h]
};

}  // namespace dtn
