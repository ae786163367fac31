#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

#include "dtn/vec.hpp"

namespace dtn {

/// One harmonic of a polar radius function: a cos(jθ) + b sin(jθ).
struct FourierTerm {
  int harmonic = 1;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// Star-shaped closed curve r(θ) = base_radius + Σ terms about `center`.
struct PolarCurve {
  Vec3 center{};
  double base_radius = 1.0;
  std::vector<FourierTerm> terms;

  double radius(double theta) const;
  double radius_derivative(double theta) const;
  Vec3 point(double theta) const;
  /// Counterclockwise tangent dP/dθ.
  Vec3 tangent(double theta) const;
};

enum class Shape { unit_square, polar_curve, multi_loop, sphere3d };

struct DomainSpec {
  Shape shape = Shape::unit_square;
  PolarCurve outer;  // polar_curve and multi_loop
  PolarCurve inner;  // multi_loop hole
  Vec3 center{};     // sphere3d
  double radius = 1.0;

  static DomainSpec unit_square();
  static DomainSpec polar(PolarCurve curve);
  static DomainSpec annulus(PolarCurve outer, PolarCurve inner);
  static DomainSpec sphere(Vec3 center, double radius);

  int dimension() const { return shape == Shape::sphere3d ? 3 : 2; }
};

/// Throws InvalidDomainError when the domain violates its invariants.
void validate(const DomainSpec& spec);

/// Collocation points on a closed boundary with outward unit normals and
/// arc-length (or surface-area) quadrature weights.
struct BoundaryGrid {
  int dimension = 2;
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<double> weights;
  /// Square: 1..4 for the edges Γ1..Γ4 counterclockwise from (0,0).
  /// Multi-loop: 1 outer, 2 inner. Otherwise 1.
  std::vector<int> segment;

  std::size_t size() const { return points.size(); }
  double total_weight() const;
  /// Smallest distance between consecutive points.
  double min_spacing() const;
};

/// Discretize the boundary of `spec` with n points.
///
/// Square: n/4 cell-centred points per edge, counterclockwise from (0,0), so
/// no point sits on a corner. Polar curves: uniform in θ with weights
/// Δθ·sqrt(r² + r'²). Multi-loop: n split between the loops in proportion to
/// their lengths, the inner loop traversed clockwise. Sphere: Fibonacci
/// lattice with equal area weights.
BoundaryGrid make_boundary_grid(const DomainSpec& spec, std::size_t n);

/// Strict interior test.
bool contains(const DomainSpec& spec, const Vec3& p);

/// Unsigned distance from p to the boundary.
double distance_to_boundary(const DomainSpec& spec, const Vec3& p);

/// Opening angle of the domain around p: 2π inside, π on a smooth boundary
/// or straight edge, π/2 at a square corner, 0 outside. Points within `tol`
/// of the boundary count as boundary points. Planar domains only.
double interior_angle(const DomainSpec& spec, const Vec3& p, double tol = 1e-12);

struct Box {
  Vec3 lo{};
  Vec3 hi{};

  bool contains(const Vec3& p) const;
  bool strictly_contains(const Box& other) const;
};

Box bounding_box(const DomainSpec& spec);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::size_t, 3>> triangles;
  double target_h = 0.0;

  double signed_area(std::size_t t) const;
  double total_area() const;
};

/// Structured mesh of [0,1]²: ceil(1/h)² cells, two triangles per cell.
TriMesh triangulate_square(double h);

/// Read a Gmsh MSH 2 ASCII file. Non-triangle elements are skipped, node ids
/// are remapped to dense 0-based indices, and every triangle is reoriented
/// to positive area.
TriMesh parse_msh(std::istream& in);
void write_msh(std::ostream& out, const TriMesh& mesh);

/// CSV with header `x,y,z,nx,ny,nz,weight,segment`.
void write_grid_csv(std::ostream& out, const BoundaryGrid& grid);
/// CSV with header `x1,y1,x2,y2,x3,y3`, one triangle per row.
void write_mesh_csv(std::ostream& out, const TriMesh& mesh);

}  // namespace dtn
