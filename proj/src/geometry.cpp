#include "dtn/geometry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "dtn/error.hpp"

namespace dtn {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Per-node weights (in units of h) for n cell-centred nodes on one edge: the
// midpoint rule with symmetric end corrections on the first and last m nodes,
// chosen so polynomials up to degree 2m-1 integrate exactly. The edge
// integral then converges like h^(2m) instead of h^2.
std::vector<double> corrected_edge_weights(std::size_t n) {
  std::vector<double> w(n, 1.0);
  const std::size_t m = std::min<std::size_t>(3, n / 4);
  if (m == 0) return w;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n) - 0.5;
  const auto mi = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd a(mi, mi);
  Eigen::VectorXd b(mi);
  for (Eigen::Index r = 0; r < mi; ++r) {
    const int k = 2 * static_cast<int>(r);
    double base = 0.0;
    for (double ti : t) base += std::pow(ti, k);
    b(r) = std::pow(0.5, k) / (k + 1) - base / static_cast<double>(n);
    for (Eigen::Index j = 0; j < mi; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      a(r, j) = (std::pow(t[jj], k) + std::pow(t[n - 1 - jj], k)) / static_cast<double>(n);
    }
  }
  const Eigen::VectorXd c = a.partialPivLu().solve(b);
  for (std::size_t j = 0; j < m; ++j) {
    w[j] += c(static_cast<Eigen::Index>(j));
    w[n - 1 - j] += c(static_cast<Eigen::Index>(j));
  }
  return w;
}

// Dense sampling used for validation, lengths and distance searches.
constexpr std::size_t kCurveSamples = 4096;

double curve_length(const PolarCurve& c) {
  double len = 0.0;
  const double dt = kTwoPi / kCurveSamples;
  for (std::size_t i = 0; i < kCurveSamples; ++i) {
    len += norm(c.tangent(dt * static_cast<double>(i))) * dt;
  }
  return len;
}

bool inside_polar(const PolarCurve& c, const Vec3& p) {
  const double dx = p.x - c.center.x;
  const double dy = p.y - c.center.y;
  const double rho = std::hypot(dx, dy);
  if (rho == 0.0) return c.radius(0.0) > 0.0;
  return rho < c.radius(std::atan2(dy, dx));
}

double distance_to_curve(const PolarCurve& c, const Vec3& p) {
  const double dt = kTwoPi / kCurveSamples;
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < kCurveSamples; ++i) {
    const double d = distance(c.point(dt * static_cast<double>(i)), p);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  // golden-section refinement on the bracketing parameter interval
  double a = dt * (static_cast<double>(best) - 1.0);
  double b = dt * (static_cast<double>(best) + 1.0);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double t1 = b - phi * (b - a);
  double t2 = a + phi * (b - a);
  double f1 = distance(c.point(t1), p);
  double f2 = distance(c.point(t2), p);
  for (int it = 0; it < 80; ++it) {
    if (f1 < f2) {
      b = t2;
      t2 = t1;
      f2 = f1;
      t1 = b - phi * (b - a);
      f1 = distance(c.point(t1), p);
    } else {
      a = t1;
      t1 = t2;
      f1 = f2;
      t2 = a + phi * (b - a);
      f2 = distance(c.point(t2), p);
    }
  }
  return std::min({best_d, f1, f2});
}

void append_polar(BoundaryGrid& grid, const PolarCurve& c, std::size_t n,
                  bool clockwise, int segment) {
  const double dt = kTwoPi / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = dt * static_cast<double>(i);
    const double theta = clockwise ? -s : s;
    const Vec3 t = c.tangent(theta);
    const double speed = norm(t);
    // outward for a counterclockwise loop is the tangent turned clockwise
    Vec3 nrm{t.y / speed, -t.x / speed, 0.0};
    if (clockwise) nrm *= -1.0;
    grid.points.push_back(c.point(theta));
    grid.normals.push_back(nrm);
    grid.weights.push_back(dt * speed);
    grid.segment.push_back(segment);
  }
}

void validate_curve(const PolarCurve& c, const char* which) {
  const double dt = kTwoPi / kCurveSamples;
  for (std::size_t i = 0; i < kCurveSamples; ++i) {
    if (!(c.radius(dt * static_cast<double>(i)) > 0.0)) {
      throw InvalidDomainError(std::string(which) +
                               " polar radius is not positive everywhere");
    }
  }
}

}  // namespace

double PolarCurve::radius(double theta) const {
  double r = base_radius;
  for (const auto& t : terms) {
    const double a = t.harmonic * theta;
    r += t.cos_coeff * std::cos(a) + t.sin_coeff * std::sin(a);
  }
  return r;
}

double PolarCurve::radius_derivative(double theta) const {
  double dr = 0.0;
  for (const auto& t : terms) {
    const double a = t.harmonic * theta;
    dr += t.harmonic * (-t.cos_coeff * std::sin(a) + t.sin_coeff * std::cos(a));
  }
  return dr;
}

Vec3 PolarCurve::point(double theta) const {
  const double r = radius(theta);
  return {center.x + r * std::cos(theta), center.y + r * std::sin(theta), 0.0};
}

Vec3 PolarCurve::tangent(double theta) const {
  const double r = radius(theta);
  const double dr = radius_derivative(theta);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {dr * c - r * s, dr * s + r * c, 0.0};
}

DomainSpec DomainSpec::unit_square() { return DomainSpec{}; }

DomainSpec DomainSpec::polar(PolarCurve curve) {
  DomainSpec s;
  s.shape = Shape::polar_curve;
  s.outer = std::move(curve);
  return s;
}

DomainSpec DomainSpec::annulus(PolarCurve outer, PolarCurve inner) {
  DomainSpec s;
  s.shape = Shape::multi_loop;
  s.outer = std::move(outer);
  s.inner = std::move(inner);
  return s;
}

DomainSpec DomainSpec::sphere(Vec3 center, double radius) {
  DomainSpec s;
  s.shape = Shape::sphere3d;
  s.center = center;
  s.radius = radius;
  return s;
}

void validate(const DomainSpec& spec) {
  switch (spec.shape) {
    case Shape::unit_square:
      return;
    case Shape::polar_curve:
      validate_curve(spec.outer, "outer");
      return;
    case Shape::multi_loop: {
      validate_curve(spec.outer, "outer");
      validate_curve(spec.inner, "inner");
      const double dt = kTwoPi / kCurveSamples;
      for (std::size_t i = 0; i < kCurveSamples; ++i) {
        if (!inside_polar(spec.outer, spec.inner.point(dt * static_cast<double>(i)))) {
          throw InvalidDomainError("inner loop is not strictly inside the outer loop");
        }
      }
      return;
    }
    case Shape::sphere3d:
      if (!(spec.radius > 0.0)) throw InvalidDomainError("sphere radius must be positive");
      return;
  }
}

double BoundaryGrid::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

double BoundaryGrid::min_spacing() const {
  if (dimension == 3) {
    // equal-area lattice: characteristic spacing
    return std::sqrt(total_weight() / static_cast<double>(size()));
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    best = std::min(best, distance(points[i], points[(i + 1) % size()]));
  }
  return best;
}

BoundaryGrid make_boundary_grid(const DomainSpec& spec, std::size_t n) {
  if (n < 8) throw InvalidDomainError("boundary grid needs at least 8 points");
  validate(spec);
  BoundaryGrid grid;
  grid.dimension = spec.dimension();
  grid.points.reserve(n);
  grid.normals.reserve(n);
  grid.weights.reserve(n);
  grid.segment.reserve(n);

  switch (spec.shape) {
    case Shape::unit_square: {
      if (n % 4 != 0) throw InvalidDomainError("square grid size must be a multiple of 4");
      const std::size_t per_edge = n / 4;
      const double h = 1.0 / static_cast<double>(per_edge);
      const Vec3 start[4] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
      const Vec3 dir[4] = {{1, 0, 0}, {0, 1, 0}, {-1, 0, 0}, {0, -1, 0}};
      const Vec3 nrm[4] = {{0, -1, 0}, {1, 0, 0}, {0, 1, 0}, {-1, 0, 0}};
      const auto edge_w = corrected_edge_weights(per_edge);
      for (int e = 0; e < 4; ++e) {
        for (std::size_t i = 0; i < per_edge; ++i) {
          const double s = (static_cast<double>(i) + 0.5) * h;
          grid.points.push_back(start[e] + s * dir[e]);
          grid.normals.push_back(nrm[e]);
          grid.weights.push_back(h * edge_w[i]);
          grid.segment.push_back(e + 1);
        }
      }
      break;
    }
    case Shape::polar_curve:
      append_polar(grid, spec.outer, n, false, 1);
      break;
    case Shape::multi_loop: {
      const double lo = curve_length(spec.outer);
      const double li = curve_length(spec.inner);
      auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(n) * lo / (lo + li)));
      n_out = std::clamp<std::size_t>(n_out, 4, n - 4);
      append_polar(grid, spec.outer, n_out, false, 1);
      append_polar(grid, spec.inner, n - n_out, true, 2);
      break;
    }
    case Shape::sphere3d: {
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      const double w = 4.0 * std::numbers::pi * spec.radius * spec.radius / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * static_cast<double>(i);
        const Vec3 u{rho * std::cos(phi), rho * std::sin(phi), z};
        grid.points.push_back(spec.center + spec.radius * u);
        grid.normals.push_back(u);
        grid.weights.push_back(w);
        grid.segment.push_back(1);
      }
      break;
    }
  }
  return grid;
}

bool contains(const DomainSpec& spec, const Vec3& p) {
  switch (spec.shape) {
    case Shape::unit_square:
      return p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0;
    case Shape::polar_curve:
      return inside_polar(spec.outer, p);
    case Shape::multi_loop:
      return inside_polar(spec.outer, p) && !inside_polar(spec.inner, p) &&
             distance_to_curve(spec.inner, p) > 1e-14;
    case Shape::sphere3d:
      return distance(p, spec.center) < spec.radius;
  }
  return false;
}

double distance_to_boundary(const DomainSpec& spec, const Vec3& p) {
  switch (spec.shape) {
    case Shape::unit_square: {
      if (contains(spec, p)) {
        return std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y});
      }
      const double dx = std::max({-p.x, 0.0, p.x - 1.0});
      const double dy = std::max({-p.y, 0.0, p.y - 1.0});
      return std::hypot(dx, dy);
    }
    case Shape::polar_curve:
      return distance_to_curve(spec.outer, p);
    case Shape::multi_loop:
      return std::min(distance_to_curve(spec.outer, p), distance_to_curve(spec.inner, p));
    case Shape::sphere3d:
      return std::abs(distance(p, spec.center) - spec.radius);
  }
  return 0.0;
}

double interior_angle(const DomainSpec& spec, const Vec3& p, double tol) {
  if (spec.dimension() != 2) throw InvalidDomainError("interior angle is defined for planar domains");
  const double d = distance_to_boundary(spec, p);
  if (d <= tol) {
    if (spec.shape == Shape::unit_square) {
      const bool at_x = std::abs(p.x) <= tol || std::abs(p.x - 1.0) <= tol;
      const bool at_y = std::abs(p.y) <= tol || std::abs(p.y - 1.0) <= tol;
      if (at_x && at_y) return 0.5 * std::numbers::pi;
    }
    return std::numbers::pi;
  }
  return contains(spec, p) ? kTwoPi : 0.0;
}

bool Box::contains(const Vec3& p) const {
  return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y && p.z >= lo.z &&
         p.z <= hi.z;
}

bool Box::strictly_contains(const Box& o) const {
  const bool planar = lo.z == hi.z && o.lo.z == o.hi.z;
  return lo.x < o.lo.x && lo.y < o.lo.y && hi.x > o.hi.x && hi.y > o.hi.y &&
         (planar || (lo.z < o.lo.z && hi.z > o.hi.z));
}

Box bounding_box(const DomainSpec& spec) {
  switch (spec.shape) {
    case Shape::unit_square:
      return {{0, 0, 0}, {1, 1, 0}};
    case Shape::polar_curve:
    case Shape::multi_loop: {
      Box b{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0},
            {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0}};
      const double dt = kTwoPi / kCurveSamples;
      for (std::size_t i = 0; i < kCurveSamples; ++i) {
        const Vec3 q = spec.outer.point(dt * static_cast<double>(i));
        b.lo.x = std::min(b.lo.x, q.x);
        b.lo.y = std::min(b.lo.y, q.y);
        b.hi.x = std::max(b.hi.x, q.x);
        b.hi.y = std::max(b.hi.y, q.y);
      }
      return b;
    }
    case Shape::sphere3d: {
      const Vec3 r{spec.radius, spec.radius, spec.radius};
      return {spec.center - r, spec.center + r};
    }
  }
  return {};
}

double TriMesh::signed_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3& a = vertices[tri[0]];
  const Vec3& b = vertices[tri[1]];
  const Vec3& c = vertices[tri[2]];
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += signed_area(t);
  return s;
}

TriMesh triangulate_square(double h) {
  if (!(h > 0.0 && h < 1.0)) throw ConfigError("element size must lie in (0, 1)");
  const auto m = static_cast<std::size_t>(std::ceil(1.0 / h - 1e-9));
  const double step = 1.0 / static_cast<double>(m);
  TriMesh mesh;
  mesh.target_h = h;
  mesh.vertices.reserve((m + 1) * (m + 1));
  for (std::size_t j = 0; j <= m; ++j) {
    for (std::size_t i = 0; i <= m; ++i) {
      mesh.vertices.push_back({static_cast<double>(i) * step, static_cast<double>(j) * step, 0.0});
    }
  }
  auto id = [m](std::size_t i, std::size_t j) { return j * (m + 1) + i; };
  mesh.triangles.reserve(2 * m * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < m; ++i) {
      mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return mesh;
}

namespace {

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }
  std::string expect(const char* what) {
    std::string line;
    if (!next(line)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_no_);
    return line;
  }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> tok;
  std::istringstream ss(line);
  std::string t;
  while (ss >> t) tok.push_back(t);
  return tok;
}

long long to_int(const std::string& s, std::size_t line) {
  long long v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError("expected an integer, got '" + s + "'", line);
  }
  return v;
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ParseError("expected a number, got '" + s + "'", line);
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
}

}  // namespace

TriMesh parse_msh(std::istream& in) {
  LineReader reader(in);
  TriMesh mesh;
  std::unordered_map<long long, std::size_t> node_index;
  bool have_format = false;
  bool have_nodes = false;
  bool have_elements = false;
  std::string line;

  while (reader.next(line)) {
    const std::string header = trim(line);
    if (header.empty() || header[0] != '$') {
      throw ParseError("expected a section header, got '" + header + "'", reader.line_no());
    }
    const std::string name = header.substr(1);
    const std::string end_tag = "$End" + name;

    if (name == "MeshFormat") {
      const std::size_t ln = (line = reader.expect("format line"), reader.line_no());
      const auto tok = split(line);
      if (tok.size() < 3) throw ParseError("malformed $MeshFormat line", ln);
      const double version = to_double(tok[0], ln);
      if (version < 2.0 || version >= 3.0) throw ParseError("only MSH version 2 is supported", ln);
      if (to_int(tok[1], ln) != 0) throw ParseError("only ASCII MSH files are supported", ln);
      have_format = true;
    } else if (name == "Nodes") {
      const std::size_t ln = (line = reader.expect("node count"), reader.line_no());
      const long long count = to_int(trim(line), ln);
      if (count < 0) throw ParseError("negative node count", ln);
      mesh.vertices.reserve(static_cast<std::size_t>(count));
      for (long long i = 0; i < count; ++i) {
        line = reader.expect("node record");
        const std::size_t nl = reader.line_no();
        const auto tok = split(line);
        if (tok.size() != 4) throw ParseError("node record needs 'id x y z'", nl);
        const long long id = to_int(tok[0], nl);
        if (!node_index.emplace(id, mesh.vertices.size()).second) {
          throw ParseError("duplicate node id " + tok[0], nl);
        }
        mesh.vertices.push_back({to_double(tok[1], nl), to_double(tok[2], nl), to_double(tok[3], nl)});
      }
      have_nodes = true;
    } else if (name == "Elements") {
      if (!have_nodes) throw ParseError("$Elements before $Nodes", reader.line_no());
      const std::size_t ln = (line = reader.expect("element count"), reader.line_no());
      const long long count = to_int(trim(line), ln);
      if (count < 0) throw ParseError("negative element count", ln);
      for (long long i = 0; i < count; ++i) {
        line = reader.expect("element record");
        const std::size_t el = reader.line_no();
        const auto tok = split(line);
        if (tok.size() < 3) throw ParseError("element record too short", el);
        std::vector<long long> v;
        v.reserve(tok.size());
        for (const auto& t : tok) v.push_back(to_int(t, el));
        const long long type = v[1];
        const long long ntags = v[2];
        if (ntags < 0 || static_cast<std::size_t>(3 + ntags) > v.size()) {
          throw ParseError("element tag count exceeds record", el);
        }
        const std::size_t first = static_cast<std::size_t>(3 + ntags);
        std::vector<std::size_t> nodes;
        for (std::size_t k = first; k < v.size(); ++k) {
          const auto it = node_index.find(v[k]);
          if (it == node_index.end()) {
            throw ParseError("element " + tok[0] + " references undefined node " + std::to_string(v[k]), el);
          }
          nodes.push_back(it->second);
        }
        if (type != 2) continue;  // keep 3-node triangles only
        if (nodes.size() != 3) throw ParseError("triangle element needs 3 nodes", el);
        mesh.triangles.push_back({nodes[0], nodes[1], nodes[2]});
        if (mesh.signed_area(mesh.triangles.size() - 1) < 0.0) {
          std::swap(mesh.triangles.back()[1], mesh.triangles.back()[2]);
        }
      }
      have_elements = true;
    } else {
      // unknown section: skip to its end tag
      for (;;) {
        line = reader.expect(end_tag.c_str());
        if (trim(line) == end_tag) break;
      }
      continue;
    }
    line = reader.expect(end_tag.c_str());
    if (trim(line) != end_tag) {
      throw ParseError("expected '" + end_tag + "', got '" + trim(line) + "'", reader.line_no());
    }
  }
  if (!have_format) throw ParseError("missing $MeshFormat section", reader.line_no());
  if (!have_nodes || !have_elements) throw ParseError("missing $Nodes or $Elements section", reader.line_no());
  return mesh;
}

void write_msh(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << mesh.vertices.size() << '\n';
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    out << i + 1 << ' ' << v.x << ' ' << v.y << ' ' << v.z << '\n';
  }
  out << "$EndNodes\n$Elements\n" << mesh.triangles.size() << '\n';
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    out << t + 1 << " 2 2 0 1 " << tri[0] + 1 << ' ' << tri[1] + 1 << ' ' << tri[2] + 1 << '\n';
  }
  out << "$EndElements\n";
}

void write_grid_csv(std::ostream& out, const BoundaryGrid& grid) {
  out.precision(17);
  out << "x,y,z,nx,ny,nz,weight,segment\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& p = grid.points[i];
    const auto& n = grid.normals[i];
    out << p.x << ',' << p.y << ',' << p.z << ',' << n.x << ',' << n.y << ',' << n.z << ','
        << grid.weights[i] << ',' << grid.segment[i] << '\n';
  }
}

void write_mesh_csv(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << "x1,y1,x2,y2,x3,y3\n";
  for (const auto& tri : mesh.triangles) {
    const auto& a = mesh.vertices[tri[0]];
    const auto& b = mesh.vertices[tri[1]];
    const auto& c = mesh.vertices[tri[2]];
    out << a.x << ',' << a.y << ',' << b.x << ',' << b.y << ',' << c.x << ',' << c.y << '\n';
  }
}

}  // namespace dtn
