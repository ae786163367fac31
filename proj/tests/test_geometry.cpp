#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

#include "dtn/error.hpp"
#include "dtn/geometry.hpp"
#include "dtn/serialization.hpp"

using namespace dtn;
using std::numbers::pi;

TEST_CASE("square grid: 100 points per edge, perimeter 4, counterclockwise from the origin") {
  const auto grid = make_boundary_grid(DomainSpec::unit_square(), 400);
  REQUIRE(grid.size() == 400);
  CHECK(grid.total_weight() == doctest::Approx(4.0).epsilon(1e-14));
  for (int s = 1; s <= 4; ++s) CHECK(std::count(grid.segment.begin(), grid.segment.end(), s) == 100);
  CHECK(grid.points[0].x == doctest::Approx(0.005));
  CHECK(grid.points[0].y == 0.0);
  CHECK(grid.normals[0] == Vec3{0, -1, 0});
  CHECK(grid.points[100].x == 1.0);
  CHECK(grid.normals[100] == Vec3{1, 0, 0});
  CHECK(grid.points[200].y == 1.0);
  CHECK(grid.points[300].x == 0.0);
  for (const auto& p : grid.points) {
    const bool corner = (p.x == 0.0 || p.x == 1.0) && (p.y == 0.0 || p.y == 1.0);
    CHECK_FALSE(corner);
  }
}

TEST_CASE("grid size must be divisible by four on the square and at least eight") {
  CHECK_THROWS_AS(make_boundary_grid(DomainSpec::unit_square(), 402), InvalidDomainError);
  CHECK_THROWS_AS(make_boundary_grid(DomainSpec::unit_square(), 4), InvalidDomainError);
}

TEST_CASE("unit circle grid has weight 2 pi") {
  const auto grid = make_boundary_grid(domain_preset("disk"), 400);
  CHECK(std::abs(grid.total_weight() - 2 * pi) < 1e-4);
  CHECK(std::abs(grid.total_weight() - 2 * pi) < 1e-12);
}

namespace {

void check_grid_invariants(const BoundaryGrid& grid, const Vec3& centroid, bool convex) {
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(norm(grid.normals[i]) - 1.0) < 1e-12);
    CHECK(grid.weights[i] > 0.0);
    if (convex) CHECK(dot(grid.points[i] - centroid, grid.normals[i]) > 0.0);
  }
}

// Normals against the centred difference of neighbouring points on the same loop.
double max_tangent_dot(const BoundaryGrid& grid) {
  double worst = 0.0;
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t prev = (i + n - 1) % n, next = (i + 1) % n;
    if (grid.segment[prev] != grid.segment[i] || grid.segment[next] != grid.segment[i]) continue;
    const Vec3 t = grid.points[next] - grid.points[prev];
    worst = std::max(worst, std::abs(dot(t, grid.normals[i])) / norm(t));
  }
  return worst;
}

}  // namespace

TEST_CASE("normals are unit, outward and orthogonal to the discrete tangent") {
  const auto square = make_boundary_grid(DomainSpec::unit_square(), 400);
  check_grid_invariants(square, {0.5, 0.5, 0}, true);
  CHECK(max_tangent_dot(square) < 1e-12);

  const auto disk = make_boundary_grid(domain_preset("disk"), 400);
  check_grid_invariants(disk, {0, 0, 0}, true);
  CHECK(max_tangent_dot(disk) < 1e-12);

  // Uniform-θ sampling: the centred difference of neighbours is a second-order
  // tangent approximation, so on this curve the mismatch scales with Δθ².
  const auto flower = make_boundary_grid(domain_preset("flower"), 400);
  check_grid_invariants(flower, {0, 0, 0}, false);
  CHECK(max_tangent_dot(flower) < 2e-3);
  const auto fine = make_boundary_grid(domain_preset("flower"), 40000);
  CHECK(max_tangent_dot(fine) < 1e-6);
}

TEST_CASE("flower normals match the analytic tangent to 1e-8") {
  const auto spec = domain_preset("flower");
  const auto grid = make_boundary_grid(spec, 400);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double theta = 2 * pi * static_cast<double>(i) / 400.0;
    const double step = 1e-6;
    const Vec3 t = spec.outer.point(theta + step) - spec.outer.point(theta - step);
    CHECK(std::abs(dot(t, grid.normals[i])) / norm(t) < 1e-8);
  }
}

TEST_CASE("annulus grid splits points by loop length and flips the hole") {
  const auto spec = domain_preset("annulus");
  const auto grid = make_boundary_grid(spec, 400);
  const auto inner = std::count(grid.segment.begin(), grid.segment.end(), 2);
  CHECK(inner == 114);
  CHECK(grid.total_weight() == doctest::Approx(2 * pi * 1.4).epsilon(1e-12));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double radial = dot(grid.points[i], grid.normals[i]) / norm(grid.points[i]);
    CHECK(radial == doctest::Approx(grid.segment[i] == 1 ? 1.0 : -1.0));
  }
}

TEST_CASE("sphere grid: Fibonacci lattice with area weights") {
  const auto grid = make_boundary_grid(domain_preset("sphere"), 1200);
  CHECK(grid.size() == 1200);
  CHECK(grid.total_weight() == doctest::Approx(4 * pi).epsilon(1e-12));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(norm(grid.points[i]) == doctest::Approx(1.0));
    CHECK(dot(grid.points[i], grid.normals[i]) == doctest::Approx(1.0));
  }
}

TEST_CASE("contains") {
  CHECK(contains(DomainSpec::unit_square(), {0.5, 0.5, 0}));
  CHECK_FALSE(contains(DomainSpec::unit_square(), {1.5, 0.5, 0}));
  CHECK_FALSE(contains(DomainSpec::unit_square(), {1.0, 0.5, 0}));
  CHECK(contains(domain_preset("disk"), {0.99, 0, 0}));
  CHECK_FALSE(contains(domain_preset("annulus"), {0.2, 0, 0}));
  CHECK(contains(domain_preset("annulus"), {0.7, 0, 0}));
}

TEST_CASE("distance to the boundary") {
  CHECK(distance_to_boundary(DomainSpec::unit_square(), {0.5, 0.2, 0}) == doctest::Approx(0.2));
  CHECK(distance_to_boundary(DomainSpec::unit_square(), {2.0, 2.0, 0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(distance_to_boundary(domain_preset("disk"), {3.0, 0, 0}) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(distance_to_boundary(domain_preset("annulus"), {0.1, 0, 0}) == doctest::Approx(0.3).epsilon(1e-10));
}

TEST_CASE("interior angle on the square") {
  const auto sq = DomainSpec::unit_square();
  CHECK(interior_angle(sq, {0.5, 0.5, 0}) == doctest::Approx(2 * pi));
  CHECK(interior_angle(sq, {0.5, 0.0, 0}) == doctest::Approx(pi));
  CHECK(interior_angle(sq, {0.0, 0.0, 0}) == doctest::Approx(pi / 2));
  CHECK(interior_angle(sq, {2.0, 0.0, 0}) == 0.0);
}

TEST_CASE("invalid domains") {
  CHECK_THROWS_AS(validate(DomainSpec::polar(PolarCurve{{0, 0, 0}, 0.1, {{2, 0.0, 0.3}}})), InvalidDomainError);
  CHECK_THROWS_AS(validate(DomainSpec::annulus(PolarCurve{{0, 0, 0}, 1.0, {}}, PolarCurve{{0, 0, 0}, 1.5, {}})),
                  InvalidDomainError);
  CHECK_THROWS_AS(validate(DomainSpec::sphere({0, 0, 0}, -1.0)), InvalidDomainError);
}

TEST_CASE("triangulate_square counts and conserves area") {
  const auto coarse = triangulate_square(0.5);
  CHECK(coarse.triangles.size() == 8);
  CHECK(coarse.total_area() == doctest::Approx(1.0));
  const auto h02 = triangulate_square(0.02);
  CHECK(h02.triangles.size() == 5000);
  const auto h01 = triangulate_square(0.01);
  CHECK(h01.triangles.size() == 20000);
  CHECK(std::abs(h01.total_area() - 1.0) < 1e-12);
  for (std::size_t t = 0; t < h01.triangles.size(); ++t) CHECK(h01.signed_area(t) > 0.0);
  CHECK_THROWS_AS(triangulate_square(0.0), ConfigError);
  CHECK_THROWS_AS(triangulate_square(1.0), ConfigError);
}

namespace {

const char* kTwoTriangles = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
3
1 1 2 0 1 1 2
2 2 2 0 1 1 2 3
3 2 2 0 1 1 4 3
$EndElements
)";

std::set<std::array<double, 6>> triangle_set(const TriMesh& m) {
  std::set<std::array<double, 6>> out;
  for (const auto& t : m.triangles) {
    std::array<std::pair<double, double>, 3> v{};
    for (int k = 0; k < 3; ++k) v[k] = {m.vertices[t[k]].x, m.vertices[t[k]].y};
    std::sort(v.begin(), v.end());
    out.insert({v[0].first, v[0].second, v[1].first, v[1].second, v[2].first, v[2].second});
  }
  return out;
}

}  // namespace

TEST_CASE("parse_msh: two triangles, line element skipped, orientation fixed") {
  std::istringstream in(kTwoTriangles);
  const auto mesh = parse_msh(in);
  CHECK(mesh.triangles.size() == 2);
  CHECK(mesh.total_area() == doctest::Approx(1.0));
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) CHECK(mesh.signed_area(t) > 0.0);
}

TEST_CASE("parse_msh skips quads") {
  std::string text = kTwoTriangles;
  text.replace(text.find("3\n1 1 2"), 2, "4\n");
  text.replace(text.find("$EndElements"), 0, "4 3 2 0 1 1 2 3 4\n");
  std::istringstream in(text);
  const auto mesh = parse_msh(in);
  CHECK(mesh.triangles.size() == 2);
}

TEST_CASE("parse_msh reports dangling node ids with the element line") {
  std::string text = kTwoTriangles;
  text.replace(text.find("3 2 2 0 1 1 4 3"), 15, "3 2 2 0 1 1 99 3");
  std::istringstream in(text);
  try {
    parse_msh(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 15);
    CHECK(std::string(e.what()).find("99") != std::string::npos);
  }
}

TEST_CASE("parse_msh rejects malformed input") {
  std::istringstream missing("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n2\n1 0 0 0\n");
  CHECK_THROWS_AS(parse_msh(missing), ParseError);
  std::istringstream token("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 zero 0 0\n$EndNodes\n");
  try {
    parse_msh(token);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
}

TEST_CASE("MSH round trip keeps the triangle set") {
  const auto mesh = triangulate_square(0.25);
  std::stringstream buf;
  write_msh(buf, mesh);
  const auto back = parse_msh(buf);
  CHECK(triangle_set(back) == triangle_set(mesh));
}

TEST_CASE("CSV writers carry documented headers") {
  std::ostringstream g, m;
  write_grid_csv(g, make_boundary_grid(DomainSpec::unit_square(), 8));
  write_mesh_csv(m, triangulate_square(0.5));
  CHECK(g.str().rfind("x,y,z,nx,ny,nz,weight,segment\n", 0) == 0);
  CHECK(m.str().rfind("x1,y1,x2,y2,x3,y3\n", 0) == 0);
  const std::string text = m.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 9);
}
