#include "dtn/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "dtn/error.hpp"

namespace dtn {

namespace {

constexpr double kPi = std::numbers::pi;

double cross2(const Vec3& a, const Vec3& b) { return a.x * b.y - a.y * b.x; }

double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = dot(ab, ab);
  const double t = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return distance(p, a + t * ab);
}


double triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const double d1 = cross2(b - a, p - a), d2 = cross2(c - b, p - b), d3 = cross2(a - c, p - c);
  const bool has_neg = d1 < 0 || d2 < 0 || d3 < 0;
  const bool has_pos = d1 > 0 || d2 > 0 || d3 > 0;
  if (!(has_neg && has_pos)) return 0.0;
  return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

// Maps the seven node values of a triangle to the coefficients of the
// least-squares quadratic in local coordinates (ξ, η): 1, ξ, η, ξ², ξη, η².
const Eigen::Matrix<double, 6, 7>& quadratic_fit();

using Moments = Eigen::Matrix<double, 7, 1>;

// ∫ ρ^(n-1) ln(ρL) dρ = ρ^n/n (ln(ρL) - 1/n)
double radial_primitive(int n, double rho, double log_l) {
  if (rho <= 0.0) return 0.0;
  const double dn = n;
  return std::pow(rho, n) / dn * (std::log(rho) + log_l - 1.0 / dn);
}

struct EdgeSweep {
  Vec3 x, a, b;
  Vec3 local_x;              // (ξ, η) of x
  Eigen::Matrix2d to_local;  // inverse of the affine map's linear part
  double r0;

  // Integrand in the edge parameter t; entries 0..5 hold ∫ ln r φ_k over
  // the ray segment outside the disc, entry 6 holds ∫ ln r inside it.
  Moments operator()(double t) const {
    const Vec3 p = a + t * (b - a);
    const Vec3 d = p - x;
    const double len = norm(d);
    Moments m = Moments::Zero();
    if (len == 0.0) return m;
    const double log_l = std::log(len);
    const double rho0 = r0 / len;
    const Eigen::Vector2d dl = to_local * Eigen::Vector2d(d.x, d.y);
    const double xi = local_x.x, eta = local_x.y, dxi = dl(0), deta = dl(1);
    const double i0 = rho0 < 1.0 ? radial_primitive(2, 1.0, log_l) - radial_primitive(2, rho0, log_l) : 0.0;
    const double i1 = rho0 < 1.0 ? radial_primitive(3, 1.0, log_l) - radial_primitive(3, rho0, log_l) : 0.0;
    const double i2 = rho0 < 1.0 ? radial_primitive(4, 1.0, log_l) - radial_primitive(4, rho0, log_l) : 0.0;
    m(0) = i0;
    m(1) = xi * i0 + dxi * i1;
    m(2) = eta * i0 + deta * i1;
    m(3) = xi * xi * i0 + 2 * xi * dxi * i1 + dxi * dxi * i2;
    m(4) = xi * eta * i0 + (xi * deta + eta * dxi) * i1 + dxi * deta * i2;
    m(5) = eta * eta * i0 + 2 * eta * deta * i1 + deta * deta * i2;
    m(6) = radial_primitive(2, std::min(1.0, rho0), log_l);
    return m;
  }
};

Moments gauss_legendre(const EdgeSweep& f, double t0, double t1) {
  using Rule = boost::math::quadrature::gauss<double, 10>;
  const double half = 0.5 * (t1 - t0), mid = 0.5 * (t0 + t1);
  Moments sum = Moments::Zero();
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    sum += weights[i] * (f(mid - half * abscissa[i]) + f(mid + half * abscissa[i]));
  }
  return half * sum;
}

// Bisection with a fixed absolute tolerance per piece; `budget` caps the
// number of refinements so rounding noise cannot cause runaway recursion.
Moments adaptive(const EdgeSweep& f, double t0, double t1, const Moments& whole, double tol, int& budget) {
  const double mid = 0.5 * (t0 + t1);
  const Moments left = gauss_legendre(f, t0, mid);
  const Moments right = gauss_legendre(f, mid, t1);
  const Moments both = left + right;
  if (budget <= 0 || (both - whole).cwiseAbs().maxCoeff() <= tol) return both;
  --budget;
  const Moments lhs = adaptive(f, t0, mid, left, tol, budget);
  return lhs + adaptive(f, mid, t1, right, tol, budget);
}

// Moments of ln|y - x| over one triangle: entries 0..5 against the local
// quadratic basis outside the r0-disc, entry 6 the plain integral inside it.
// The triangle is the signed sum of the three triangles (x, a, b) over its
// edges; each is swept by rays y = x + ρ (p(t) - x).
Moments near_moments(const Vec3& v1, const Vec3& v2, const Vec3& v3, const Vec3& x, double r0) {
  Eigen::Matrix2d jac;
  jac << v2.x - v1.x, v3.x - v1.x, v2.y - v1.y, v3.y - v1.y;
  const Eigen::Matrix2d inv = jac.inverse();
  const Eigen::Vector2d lx = inv * Eigen::Vector2d(x.x - v1.x, x.y - v1.y);
  const double scale = std::abs(jac.determinant());
  Moments total = Moments::Zero();
  const std::array<Vec3, 3> v{v1, v2, v3};
  const double orientation = cross2(v2 - v1, v3 - v1) > 0.0 ? 1.0 : -1.0;
  for (std::size_t e = 0; e < 3; ++e) {
    const Vec3& a = v[e];
    const Vec3& b = v[(e + 1) % 3];
    const double area2 = cross2(a - x, b - x) * orientation;
    if (std::abs(area2) <= 1e-12 * scale) continue;
    EdgeSweep sweep{x, a, b, {lx(0), lx(1), 0.0}, inv, r0};

    // Break points: the foot of the perpendicular and the disc crossings.
    std::vector<double> cuts{0.0, 1.0};
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    const double foot = dot(x - a, ab) / len2;
    if (foot > 0.0 && foot < 1.0) cuts.push_back(foot);
    const double dist2 = dot(x - a, x - a) - foot * foot * len2;
    if (r0 * r0 > dist2) {
      const double w = std::sqrt((r0 * r0 - dist2) / len2);
      for (double t : {foot - w, foot + w})
        if (t > 0.0 && t < 1.0) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());

    // The t-integrand has size 1 + |ln r|; the tolerance is set so that the
    // weighted contribution is accurate relative to the whole triangle.
    const double tol = 1e-14 * scale * (1.0 + std::abs(std::log(std::sqrt(len2)))) / std::abs(area2);
    int budget = 500;
    Moments edge = Moments::Zero();
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0.0) continue;
      edge += adaptive(sweep, cuts[i], cuts[i + 1], gauss_legendre(sweep, cuts[i], cuts[i + 1]), tol, budget);
    }
    total += area2 * edge;
  }
  return total;
}

const Eigen::Matrix<double, 6, 7>& quadratic_fit() {
  static const Eigen::Matrix<double, 6, 7> fit = [] {
    const auto& rule = seven_point_rule();
    Eigen::Matrix<double, 7, 6> v;
    for (std::size_t q = 0; q < 7; ++q) {
      const double xi = rule.barycentric[q][1], eta = rule.barycentric[q][2];
      v.row(static_cast<Eigen::Index>(q)) << 1.0, xi, eta, xi * xi, xi * eta, eta * eta;
    }
    const Eigen::Matrix<double, 6, 6> normal = v.transpose() * v;
    return Eigen::Matrix<double, 6, 7>(normal.ldlt().solve(v.transpose()));
  }();
  return fit;
}

}  // namespace

const TriangleRule& seven_point_rule() {
  static const TriangleRule rule = [] {
    constexpr double a = 0.797426985353087, b = 0.101286507323456;
    constexpr double c = 0.059715871789770, d = 0.470142064105115;
    constexpr double w0 = 0.225, w1 = 0.125939180544827, w2 = 0.132394152788506;
    TriangleRule r{};
    r.barycentric = {{{1.0 / 3, 1.0 / 3, 1.0 / 3},
                      {a, b, b},
                      {b, a, b},
                      {b, b, a},
                      {c, d, d},
                      {d, c, d},
                      {d, d, c}}};
    r.weight = {w0 / 2, w1 / 2, w1 / 2, w1 / 2, w2 / 2, w2 / 2, w2 / 2};
    return r;
  }();
  return rule;
}

double integrate_triangle(const ScalarField& f, const Vec3& v1, const Vec3& v2, const Vec3& v3) {
  const double jac = std::abs(cross2(v2 - v1, v3 - v1));
  if (jac < 1e-14) throw InvalidDomainError("degenerate triangle (|J| < 1e-14)");
  const auto& rule = seven_point_rule();
  double sum = 0.0;
  for (std::size_t q = 0; q < 7; ++q) {
    const auto& l = rule.barycentric[q];
    sum += rule.weight[q] * f(l[0] * v1 + l[1] * v2 + l[2] * v3);
  }
  return jac * sum;
}

double integrate_mesh(const ScalarField& f, const TriMesh& mesh) {
  double sum = 0.0;
  for (const auto& t : mesh.triangles) {
    sum += integrate_triangle(f, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
  }
  return sum;
}

VolumeQuadrature::VolumeQuadrature(const TriMesh& mesh, SingularIntegralConfig cfg) : cfg_(cfg), mesh_(std::make_shared<const TriMesh>(mesh)) {
  if (!(cfg.r0 > 0.0)) throw ConfigError("r0 must be positive");
  const auto& rule = seven_point_rule();
  points_.reserve(mesh.triangles.size() * 7);
  weights_.reserve(mesh.triangles.size() * 7);
  std::map<std::pair<std::size_t, std::size_t>, int> edge_count;
  for (const auto& t : mesh.triangles) {
    const Vec3& v1 = mesh.vertices[t[0]];
    const Vec3& v2 = mesh.vertices[t[1]];
    const Vec3& v3 = mesh.vertices[t[2]];
    const double jac = std::abs(cross2(v2 - v1, v3 - v1));
    if (jac < 1e-14) throw InvalidDomainError("degenerate triangle (|J| < 1e-14)");
    for (std::size_t q = 0; q < 7; ++q) {
      const auto& l = rule.barycentric[q];
      points_.push_back(l[0] * v1 + l[1] * v2 + l[2] * v3);
      weights_.push_back(jac * rule.weight[q]);
    }
    for (int e = 0; e < 3; ++e) {
      const auto a = t[static_cast<std::size_t>(e)], b = t[static_cast<std::size_t>((e + 1) % 3)];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [edge, count] : edge_count) {
    if (count == 1) boundary_edges_.push_back({mesh.vertices[edge.first], mesh.vertices[edge.second]});
  }

  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 0.0};
  Vec3 hi{-lo.x, -lo.y, 0.0};
  for (const auto& v : mesh.vertices) {
    lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), 0.0};
    hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), 0.0};
  }
  diameter_.reserve(mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    diameter_.push_back(std::max({distance(a, b), distance(b, c), distance(c, a)}));
    max_diameter_ = std::max(max_diameter_, diameter_.back());
  }
  if (mesh.triangles.empty()) return;
  bucket_origin_ = lo;
  bucket_size_ = max_diameter_;
  bucket_nx_ = static_cast<std::size_t>((hi.x - lo.x) / bucket_size_) + 1;
  bucket_ny_ = static_cast<std::size_t>((hi.y - lo.y) / bucket_size_) + 1;
  buckets_.resize(bucket_nx_ * bucket_ny_);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    double xmin = hi.x, xmax = lo.x, ymin = hi.y, ymax = lo.y;
    for (auto v : mesh.triangles[t]) {
      xmin = std::min(xmin, mesh.vertices[v].x);
      xmax = std::max(xmax, mesh.vertices[v].x);
      ymin = std::min(ymin, mesh.vertices[v].y);
      ymax = std::max(ymax, mesh.vertices[v].y);
    }
    const auto i0 = static_cast<std::size_t>((xmin - lo.x) / bucket_size_);
    const auto i1 = std::min(bucket_nx_ - 1, static_cast<std::size_t>((xmax - lo.x) / bucket_size_));
    const auto j0 = static_cast<std::size_t>((ymin - lo.y) / bucket_size_);
    const auto j1 = std::min(bucket_ny_ - 1, static_cast<std::size_t>((ymax - lo.y) / bucket_size_));
    for (std::size_t j = j0; j <= j1; ++j)
      for (std::size_t i = i0; i <= i1; ++i) buckets_[j * bucket_nx_ + i].push_back(static_cast<std::uint32_t>(t));
  }
}

std::vector<std::uint32_t> VolumeQuadrature::near_triangles(const Vec3& x) const {
  std::vector<std::uint32_t> out;
  if (buckets_.empty()) return out;
  const double reach = std::max(cfg_.r0, max_diameter_);
  auto cell = [&](double v, double origin, std::size_t count) -> std::ptrdiff_t {
    const double c = std::floor((v - origin) / bucket_size_);
    return static_cast<std::ptrdiff_t>(std::clamp(c, -1.0, static_cast<double>(count)));
  };
  const auto i0 = std::max<std::ptrdiff_t>(0, cell(x.x - reach, bucket_origin_.x, bucket_nx_));
  const auto i1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(bucket_nx_) - 1,
                                           cell(x.x + reach, bucket_origin_.x, bucket_nx_));
  const auto j0 = std::max<std::ptrdiff_t>(0, cell(x.y - reach, bucket_origin_.y, bucket_ny_));
  const auto j1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(bucket_ny_) - 1,
                                           cell(x.y + reach, bucket_origin_.y, bucket_ny_));
  for (auto j = j0; j <= j1; ++j)
    for (auto i = i0; i <= i1; ++i) {
      const auto& bucket = buckets_[static_cast<std::size_t>(j) * bucket_nx_ + static_cast<std::size_t>(i)];
      out.insert(out.end(), bucket.begin(), bucket.end());
    }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  const auto& mesh = *mesh_;
  std::erase_if(out, [&](std::uint32_t t) {
    const auto& tri = mesh.triangles[t];
    return triangle_distance(x, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]) >=
           std::max(cfg_.r0, diameter_[t]);
  });
  return out;
}

std::vector<double> VolumeQuadrature::sample(const ScalarField& f) const {
  std::vector<double> v(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) v[i] = f(points_[i]);
  return v;
}

double VolumeQuadrature::distance_to_mesh_boundary(const Vec3& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& e : boundary_edges_) d = std::min(d, segment_distance(x, e[0], e[1]));
  return d;
}

double VolumeQuadrature::opening_angle(const Vec3& x) const {
  const auto& mesh = *mesh_;
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    const double area2 = cross2(b - a, c - a);
    const double la = cross2(b - x, c - x) / area2;
    const double lb = cross2(c - x, a - x) / area2;
    const double lc = cross2(a - x, b - x) / area2;
    const double eps = 1e-12;
    if (la < -eps || lb < -eps || lc < -eps) continue;
    const int zeros = (std::abs(la) <= eps) + (std::abs(lb) <= eps) + (std::abs(lc) <= eps);
    if (zeros == 0) return 2.0 * kPi;
    if (zeros == 1) {
      total += kPi;
    } else {
      const Vec3& v = la > eps ? a : (lb > eps ? b : c);
      const Vec3& p = la > eps ? b : (lb > eps ? c : a);
      const Vec3& q = la > eps ? c : (lb > eps ? a : b);
      total += std::acos(std::clamp(dot(p - v, q - v) / (norm(p - v) * norm(q - v)), -1.0, 1.0));
    }
  }
  return std::min(total, 2.0 * kPi);
}

SingularValue VolumeQuadrature::log_integral(double c, std::span<const double> node_values, double fx,
                                             const Vec3& x) const {
  if (node_values.size() != points_.size()) throw DimensionError("node values do not match the quadrature nodes");
  const auto near = near_triangles(x);
  const auto& mesh = *mesh_;

  double far_sum = 0.0;
  auto next_near = near.begin();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (next_near != near.end() && *next_near == t) {
      ++next_near;
      continue;
    }
    for (std::size_t i = 7 * t; i < 7 * t + 7; ++i) {
      const double dx = points_[i].x - x.x, dy = points_[i].y - x.y;
      far_sum += weights_[i] * node_values[i] * std::log(dx * dx + dy * dy);
    }
  }

  const auto& fit = quadratic_fit();
  double near_sum = 0.0;
  double disc = 0.0;
  for (auto t : near) {
    const auto& tri = mesh.triangles[t];
    const auto m = near_moments(mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]], x, cfg_.r0);
    const Eigen::Matrix<double, 1, 7> node_weights = m.head<6>().transpose() * fit;
    for (std::size_t q = 0; q < 7; ++q) near_sum += node_weights(static_cast<Eigen::Index>(q)) * node_values[7 * t + q];
    disc += m(6);
  }

  SingularValue out;
  out.value = c * (0.5 * far_sum + near_sum + fx * disc);
  out.flagged = distance_to_mesh_boundary(x) < cfg_.r0;
  return out;
}

PiecewiseLinearField::PiecewiseLinearField(const TriMesh& mesh, std::vector<double> vertex_values)
    : mesh_(std::make_shared<const TriMesh>(mesh)), values_(std::move(vertex_values)) {
  if (values_.size() != mesh.vertices.size()) {
    throw DimensionError("field has " + std::to_string(values_.size()) + " values for " +
                         std::to_string(mesh.vertices.size()) + " mesh vertices");
  }
}

double PiecewiseLinearField::operator()(const Vec3& p) const {
  const auto& mesh = *mesh_;
  for (const auto& t : mesh.triangles) {
    const Vec3& a = mesh.vertices[t[0]];
    const Vec3& b = mesh.vertices[t[1]];
    const Vec3& c = mesh.vertices[t[2]];
    if (p.x < std::min({a.x, b.x, c.x}) - 1e-12 || p.x > std::max({a.x, b.x, c.x}) + 1e-12 ||
        p.y < std::min({a.y, b.y, c.y}) - 1e-12 || p.y > std::max({a.y, b.y, c.y}) + 1e-12) {
      continue;
    }
    const double area2 = cross2(b - a, c - a);
    const double la = cross2(b - p, c - p) / area2;
    const double lb = cross2(c - p, a - p) / area2;
    const double lc = 1.0 - la - lb;
    if (la >= -1e-12 && lb >= -1e-12 && lc >= -1e-12) {
      return la * values_[t[0]] + lb * values_[t[1]] + lc * values_[t[2]];
    }
  }
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const double d = distance(p, mesh.vertices[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return values_[best];
}

SingularValue newton_potential(const VolumeQuadrature& quad, std::span<const double> node_values, double fx,
                               const Vec3& x) {
  return quad.log_integral(-1.0 / (2.0 * kPi), node_values, fx, x);
}

SingularValue newton_potential(const VolumeQuadrature& quad, const ScalarField& f, const Vec3& x) {
  const auto values = quad.sample(f);
  return newton_potential(quad, values, f(x), x);
}

double log_kernel_square_reference(const Vec3& x0, double tol) {
  if (x0.x < 0.0 || x0.x > 1.0 || x0.y < 0.0 || x0.y > 1.0) {
    throw InvalidDomainError("reference point must lie in the closed unit square");
  }
  const std::array<Vec3, 4> corners{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{1, 1, 0}, Vec3{0, 1, 0}};
  double total = 0.0;
  for (std::size_t e = 0; e < 4; ++e) {
    const Vec3& a = corners[e];
    const Vec3& b = corners[(e + 1) % 4];
    const Vec3 dir = (1.0 / norm(b - a)) * (b - a);
    const double s_a = dot(a - x0, dir);
    const double s_b = dot(b - x0, dir);
    const double d = std::abs(cross2(dir, a - x0));
    if (d < 1e-15) continue;
    // Radial integral ∫_0^R r ln r² dr = R² ln R - R²/2 along the ray at
    // angle t from the foot of the perpendicular, where R = d / cos t.
    auto radial = [d](double t) {
      const double R = d / std::cos(t);
      return R * R * std::log(R) - 0.5 * R * R;
    };
    const double t_a = std::atan(s_a / d);
    const double t_b = std::atan(s_b / d);
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(radial, std::min(t_a, t_b),
                                                                           std::max(t_a, t_b), 15, tol, &err);
  }
  return total;
}

std::vector<std::string> quadbench_integrands() { return {"ln(x2+y2)", "ln((x-0.5)2+(y-0.5)2)"}; }

QuadBenchRow run_quadbench(const std::string& integrand, double h, SingularIntegralConfig cfg) {
  Vec3 x0;
  if (integrand == "ln(x2+y2)") {
    x0 = {0.0, 0.0, 0.0};
  } else if (integrand == "ln((x-0.5)2+(y-0.5)2)") {
    x0 = {0.5, 0.5, 0.0};
  } else {
    throw ConfigError("unknown quadbench integrand '" + integrand + "'");
  }
  const TriMesh mesh = triangulate_square(h);
  const VolumeQuadrature quad(mesh, cfg);
  const std::vector<double> ones(quad.size(), 1.0);
  QuadBenchRow row;
  row.integrand = integrand;
  row.h = h;
  row.computed = quad.log_integral(2.0, ones, 1.0, x0).value;
  row.reference = log_kernel_square_reference(x0);
  row.rel_error = std::abs(row.computed - row.reference) / std::abs(row.reference);
  return row;
}

double boundary_integral(std::span<const double> values, const BoundaryGrid& grid) {
  if (values.size() != grid.size()) throw DimensionError("integrand length does not match the boundary grid");
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * grid.weights[i];
  return sum;
}

Complex boundary_integral(std::span<const Complex> values, const BoundaryGrid& grid) {
  if (values.size() != grid.size()) throw DimensionError("integrand length does not match the boundary grid");
  Complex sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += values[i] * grid.weights[i];
  return sum;
}

namespace {

Complex raw_representation(const KernelSpec& kernel, const BoundaryGrid& grid, std::span<const double> g,
                           std::span<const double> h, const Vec3& x) {
  Complex sum = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Vec3& y = grid.points[j];
    const Complex dG = kernel_normal_derivative(kernel, x, y, grid.normals[j]);
    const Complex G = kernel_value(kernel, x, y);
    sum += grid.weights[j] * (g[j] * dG - G * h[j]);
  }
  return sum;
}

}  // namespace

double representation_sign() {
  static const double sigma = [] {
    const auto domain = DomainSpec::unit_square();
    const auto grid = make_boundary_grid(domain, 400);
    const std::vector<double> g(grid.size(), 1.0), h(grid.size(), 0.0);
    const double u = raw_representation(KernelSpec::laplace(), grid, g, h, {0.5, 0.5, 0.0}).real();
    return u > 0.0 ? 1.0 : -1.0;
  }();
  return sigma;
}

Reconstruction reconstruct_interior(const KernelSpec& kernel, const DomainSpec& domain, const BoundaryGrid& grid,
                                    std::span<const double> g, std::span<const double> h, const Vec3& x) {
  if (g.size() != grid.size() || h.size() != grid.size()) throw DimensionError("trace length does not match grid");
  if (!contains(domain, x)) throw InvalidDomainError("reconstruction point lies outside the domain");
  Reconstruction r;
  r.value = representation_sign() * raw_representation(kernel, grid, g, h, x);
  r.near_boundary = distance_to_boundary(domain, x) < 2.0 * grid.min_spacing();
  return r;
}

Reconstructor::Reconstructor(const KernelSpec& kernel, const DomainSpec& domain, const BoundaryGrid& grid,
                             std::vector<Vec3> points)
    : points_(std::move(points)), n_(grid.size()) {
  const double sigma = representation_sign();
  const double near = 2.0 * grid.min_spacing();
  matrix_.resize(static_cast<Eigen::Index>(points_.size()), static_cast<Eigen::Index>(2 * n_));
  near_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const Vec3& x = points_[i];
    if (!contains(domain, x)) throw InvalidDomainError("reconstruction point lies outside the domain");
    near_[i] = distance_to_boundary(domain, x) < near;
    const auto row = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < n_; ++j) {
      const Vec3& y = grid.points[j];
      const double w = sigma * grid.weights[j];
      matrix_(row, static_cast<Eigen::Index>(j)) = w * kernel_normal_derivative(kernel, x, y, grid.normals[j]);
      matrix_(row, static_cast<Eigen::Index>(n_ + j)) = -w * kernel_value(kernel, x, y);
    }
  }
}

std::vector<Complex> Reconstructor::evaluate(std::span<const double> g, std::span<const double> h) const {
  if (g.size() != n_ || h.size() != n_) throw DimensionError("trace length does not match grid");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(2 * n_));
  for (std::size_t j = 0; j < n_; ++j) {
    v[static_cast<Eigen::Index>(j)] = g[j];
    v[static_cast<Eigen::Index>(n_ + j)] = h[j];
  }
  const Eigen::VectorXcd u = matrix_ * v;
  return {u.data(), u.data() + u.size()};
}

}  // namespace dtn
