#include "dtn/solvers.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "dtn/error.hpp"
#include "dtn/random.hpp"
#include "dtn/serialization.hpp"

namespace dtn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = std::numbers::pi;

using Exact = std::function<double(const Vec3&)>;

}  // namespace

MixedPartition MixedPartition::dirichlet_on(std::initializer_list<int> edges) {
  MixedPartition p;
  p.segments.fill(BoundaryCondition::neumann);
  for (int e : edges) {
    if (e < 1 || e > 4) throw ConfigError("square edges are numbered 1..4");
    p.segments[static_cast<std::size_t>(e - 1)] = BoundaryCondition::dirichlet;
  }
  return p;
}

MixedPartition MixedPartition::parse(const std::string& text) {
  MixedPartition p;
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= 4) throw ConfigError("partition needs exactly four entries, got more in '" + text + "'");
    if (item == "D" || item == "d") {
      p.segments[i] = BoundaryCondition::dirichlet;
    } else if (item == "N" || item == "n") {
      p.segments[i] = BoundaryCondition::neumann;
    } else {
      throw ConfigError("partition entry '" + item + "' is neither D nor N");
    }
    ++i;
  }
  if (i != 4) throw ConfigError("partition needs exactly four entries: '" + text + "'");
  return p;
}

std::string MixedPartition::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < 4; ++i) {
    if (i) s += ',';
    s += segments[i] == BoundaryCondition::dirichlet ? 'D' : 'N';
  }
  return s;
}

void MixedPartition::validate(bool mixed) const {
  if (!mixed) return;
  bool has_d = false, has_n = false;
  for (auto s : segments) (s == BoundaryCondition::dirichlet ? has_d : has_n) = true;
  if (!has_d || !has_n) throw ConfigError("a mixed partition needs both Dirichlet and Neumann edges");
}

std::vector<bool> MixedPartition::dirichlet_mask(const BoundaryGrid& grid) const {
  std::vector<bool> mask(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int s = grid.segment[i];
    if (s < 1 || s > 4) throw ConfigError("edge partitions need a unit-square boundary grid");
    mask[i] = segments[static_cast<std::size_t>(s - 1)] == BoundaryCondition::dirichlet;
  }
  return mask;
}

std::vector<std::size_t> EvaluationGrid::interior_indices() const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] != PointFlag::outside) idx.push_back(i);
  }
  return idx;
}

EvaluationGrid make_evaluation_grid(const DomainSpec& domain, std::size_t resolution, double margin) {
  if (domain.dimension() != 2) throw ConfigError("evaluation grids are planar");
  if (resolution < 2) throw ConfigError("evaluation grid resolution must be at least 2");
  const Box box = bounding_box(domain);
  EvaluationGrid eg;
  const double step_x = (box.hi.x - box.lo.x) / static_cast<double>(resolution - 1);
  const double step_y = (box.hi.y - box.lo.y) / static_cast<double>(resolution - 1);
  for (std::size_t j = 0; j < resolution; ++j) {
    for (std::size_t i = 0; i < resolution; ++i) {
      const Vec3 p{box.lo.x + step_x * static_cast<double>(i), box.lo.y + step_y * static_cast<double>(j), 0.0};
      eg.points.push_back(p);
      if (!contains(domain, p)) {
        eg.flags.push_back(PointFlag::outside);
      } else {
        eg.flags.push_back(distance_to_boundary(domain, p) < margin ? PointFlag::near_boundary : PointFlag::ok);
      }
    }
  }
  return eg;
}

double relative_l2(std::span<const double> pred, std::span<const double> exact) {
  if (pred.size() != exact.size()) throw DimensionError("relative_l2 needs vectors of equal length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    num += (pred[i] - exact[i]) * (pred[i] - exact[i]);
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) throw UndefinedMetricError("relative error against a zero reference");
  return std::sqrt(num / den);
}

namespace {

std::vector<Vec3> select(const std::vector<Vec3>& points, const std::vector<std::size_t>& idx) {
  std::vector<Vec3> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(points[i]);
  return out;
}

void score(SolutionField& f, const Exact& exact) {
  if (exact) {
    f.exact.assign(f.points.size(), kNaN);
    for (std::size_t i = 0; i < f.points.size(); ++i) {
      if (f.flags[i] != PointFlag::outside) f.exact[i] = exact(f.points[i]);
    }
  }
  std::vector<double> pred_ok, exact_ok, pred_all, exact_all;
  double re2 = 0.0, im2 = 0.0;
  for (std::size_t i = 0; i < f.points.size(); ++i) {
    if (f.flags[i] == PointFlag::outside) continue;
    if (f.flags[i] == PointFlag::ok) {
      re2 += f.predicted[i].real() * f.predicted[i].real();
      im2 += f.predicted[i].imag() * f.predicted[i].imag();
    }
    if (f.exact.empty()) continue;
    pred_all.push_back(f.predicted[i].real());
    exact_all.push_back(f.exact[i]);
    if (f.flags[i] == PointFlag::ok) {
      pred_ok.push_back(f.predicted[i].real());
      exact_ok.push_back(f.exact[i]);
    }
  }
  f.imaginary_ratio = re2 + im2 > 0.0 ? std::sqrt(im2 / (re2 + im2)) : 0.0;
  if (!f.exact.empty()) {
    f.error = relative_l2(pred_ok, exact_ok);
    f.error_all_interior = relative_l2(pred_all, exact_all);
  }
}

}  // namespace

SolverContext::SolverContext(KernelSpec kernel, DomainSpec domain, BoundaryGrid grid, EvaluationGrid eval)
    : kernel_(kernel),
      domain_(std::move(domain)),
      grid_(std::move(grid)),
      eval_(std::move(eval)),
      interior_(eval_.interior_indices()),
      recon_(kernel_, domain_, grid_, select(eval_.points, interior_)) {}

SolutionField SolverContext::field(std::span<const double> g, std::span<const double> h, const Exact& exact) const {
  SolutionField f;
  f.points = eval_.points;
  f.flags = eval_.flags;
  f.predicted.assign(f.points.size(), Complex(kNaN, kNaN));
  const auto values = recon_.evaluate(g, h);
  for (std::size_t k = 0; k < interior_.size(); ++k) {
    const auto i = interior_[k];
    f.predicted[i] = values[k];
    if (recon_.near_boundary()[k] && f.flags[i] == PointFlag::ok) f.flags[i] = PointFlag::near_boundary;
  }
  score(f, exact);
  return f;
}

std::vector<double> predict_neumann(const LinearBoundaryOperator& op, std::span<const double> g) {
  const auto& layout = op.layout();
  if (g.size() != layout.n_points) {
    throw LayoutError("Dirichlet data has " + std::to_string(g.size()) + " values, operator expects " +
                      std::to_string(layout.n_points));
  }
  for (std::size_t i = 0; i < layout.input.size(); ++i) {
    if (layout.input[i].kind != TraceKind::dirichlet || layout.output[i].kind != TraceKind::neumann) {
      throw LayoutError("operator is not a Dirichlet-to-Neumann map");
    }
  }
  if (layout.input.size() != layout.n_points) throw LayoutError("operator does not cover the whole boundary");
  const double c = op.kernel().is_helmholtz() ? 0.0 : g[layout.reference_point()];
  Eigen::VectorXd in(static_cast<Eigen::Index>(layout.input.size()));
  for (std::size_t i = 0; i < layout.input.size(); ++i) in[static_cast<Eigen::Index>(i)] = g[layout.input[i].point] - c;
  const Eigen::VectorXd out = op.apply(in);
  std::vector<double> h(layout.n_points, 0.0);
  for (std::size_t i = 0; i < layout.output.size(); ++i) h[layout.output[i].point] = out[static_cast<Eigen::Index>(i)];
  return h;
}

DirichletSolution solve_dirichlet(const LinearBoundaryOperator& op, const SolverContext& ctx,
                                  std::span<const double> g, const Exact& exact) {
  op.check_compatible(OperatorLayout::dirichlet_to_neumann(ctx.grid().size()), ctx.kernel());
  DirichletSolution s;
  s.h = predict_neumann(op, g);
  s.field = ctx.field(g, s.h, exact);
  return s;
}

MixedSolution solve_mixed(const LinearBoundaryOperator& op, const SolverContext& ctx,
                          const std::vector<bool>& dirichlet, std::span<const double> g, std::span<const double> h,
                          const Exact& exact) {
  const auto layout = OperatorLayout::mixed(dirichlet);
  op.check_compatible(layout, ctx.kernel());
  if (g.size() != layout.n_points || h.size() != layout.n_points) throw DimensionError("trace length mismatch");
  MixedSolution s;
  s.g.assign(g.begin(), g.end());
  s.h.assign(h.begin(), h.end());
  const double c = ctx.kernel().is_helmholtz() ? 0.0 : g[layout.reference_point()];
  std::vector<double> shifted(g.begin(), g.end());
  for (auto& v : shifted) v -= c;
  const Eigen::VectorXd out = op.apply(gather(layout.input, shifted, h));
  for (std::size_t i = 0; i < layout.output.size(); ++i) {
    const auto& slot = layout.output[i];
    const double v = out[static_cast<Eigen::Index>(i)];
    if (slot.kind == TraceKind::neumann) {
      s.h[slot.point] = v;
    } else {
      s.g[slot.point] = v + c;
    }
  }
  s.field = ctx.field(s.g, s.h, exact);
  return s;
}

DirichletSolution solve_poisson(const LinearBoundaryOperator& op, const SolverContext& ctx,
                                const VolumeQuadrature& quad, const ScalarField& f, std::span<const double> g,
                                const Exact& exact) {
  if (ctx.kernel().family != KernelFamily::laplace2d) throw ConfigError("Poisson problems need the Laplace kernel");
  const double sigma = representation_sign();
  const auto nodes = quad.sample(f);
  const auto& grid = ctx.grid();
  if (g.size() != grid.size()) throw DimensionError("trace length mismatch");

  std::vector<double> g_mod(g.begin(), g.end());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vec3& x = grid.points[i];
    g_mod[i] -= sigma * newton_potential(quad, nodes, f(x), x).value;
  }
  DirichletSolution s = solve_dirichlet(op, ctx, g_mod);
  auto& field = s.field;
  for (auto i : ctx.interior()) {
    const Vec3& x = field.points[i];
    const auto uf = newton_potential(quad, nodes, f(x), x);
    field.predicted[i] += sigma * uf.value;
    if (uf.flagged && field.flags[i] == PointFlag::ok) field.flags[i] = PointFlag::near_boundary;
  }
  score(field, exact);
  return s;
}

DirichletSolution solve_helmholtz(const LinearBoundaryOperator& op, const SolverContext& ctx, double k,
                                  std::span<const double> g, const Exact& exact) {
  if (op.kernel().family != KernelFamily::helmholtz2d || op.kernel().k != k) {
    throw ConfigError("operator was trained for " + to_string(op.kernel().family) + " k=" +
                      format_double(op.kernel().k) + ", problem has Helmholtz k=" + format_double(k));
  }
  if (ctx.kernel().family != KernelFamily::helmholtz2d || ctx.kernel().k != k) {
    throw ConfigError("solver context kernel does not match k=" + format_double(k));
  }
  return solve_dirichlet(op, ctx, g, exact);
}

BoundaryPrediction predict_normal_derivative_3d(const LinearBoundaryOperator& op, const BoundaryGrid& grid,
                                                std::span<const double> g, std::span<const double> h_exact) {
  if (op.layout().n_points != grid.size()) throw LayoutError("operator and surface grid differ in size");
  BoundaryPrediction p;
  p.h = predict_neumann(op, g);
  if (!h_exact.empty()) p.rel_error = relative_l2(p.h, h_exact);
  return p;
}

std::vector<double> TestCase::dirichlet(const BoundaryGrid& grid) const {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = u(grid.points[i]);
  return v;
}

std::vector<double> TestCase::neumann(const BoundaryGrid& grid) const {
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = dot(grad(grid.points[i]), grid.normals[i]);
  return v;
}

std::vector<std::string> laplace_families() { return {"u1", "u2", "u3", "u4", "u5"}; }

namespace {

constexpr double kSourceClearance = 0.1;

TestCase harmonic_zero(TestCase t) {
  t.laplacian = [](const Vec3&) { return 0.0; };
  return t;
}

TestCase make_case(const std::string& family, const DomainSpec& domain, Rng& rng, std::optional<double> k) {
  TestCase t;
  t.family = family;
  if (family == "u1") {
    double m, n;
    Vec3 s;
    do {
      m = rng.uniform(-4.0, 4.0);
      n = rng.uniform(-4.0, 4.0);
      s = {m, n, 0.0};
    } while (contains(domain, s) || distance_to_boundary(domain, s) < kSourceClearance);
    t.params = {m, n};
    t.u = [m, n](const Vec3& p) { return std::log((p.x - m) * (p.x - m) + (p.y - n) * (p.y - n)); };
    t.grad = [m, n](const Vec3& p) {
      const double r2 = (p.x - m) * (p.x - m) + (p.y - n) * (p.y - n);
      return Vec3{2.0 * (p.x - m) / r2, 2.0 * (p.y - n) / r2, 0.0};
    };
    return harmonic_zero(std::move(t));
  }
  if (family == "u2") {
    const double m = rng.uniform(-4.0, 4.0), n = rng.uniform(-4.0, 4.0);
    t.params = {m, n};
    t.u = [m, n](const Vec3& p) { return m * (p.x * p.x - p.y * p.y) + n * p.x * p.y; };
    t.grad = [m, n](const Vec3& p) { return Vec3{2.0 * m * p.x + n * p.y, -2.0 * m * p.y + n * p.x, 0.0}; };
    return harmonic_zero(std::move(t));
  }
  if (family == "u3") {
    const double m = rng.uniform(-4.0, 4.0), t1 = rng.uniform(-kPi, kPi), t2 = rng.uniform(-kPi, kPi);
    t.params = {m, t1, t2};
    t.u = [=](const Vec3& p) { return std::sin(m * p.y - t1) * std::exp(m * p.x - t2); };
    t.grad = [=](const Vec3& p) {
      const double e = std::exp(m * p.x - t2);
      return Vec3{m * std::sin(m * p.y - t1) * e, m * std::cos(m * p.y - t1) * e, 0.0};
    };
    return harmonic_zero(std::move(t));
  }
  if (family == "u4") {
    const double m = rng.uniform(-4.0, 4.0), n = rng.uniform(-4.0, 4.0);
    t.params = {m, n};
    t.u = [m, n](const Vec3& p) { return m * p.x + n * p.y; };
    t.grad = [m, n](const Vec3&) { return Vec3{m, n, 0.0}; };
    return harmonic_zero(std::move(t));
  }
  if (family == "u5") {
    t.u = [](const Vec3& p) { return p.x * p.x * p.x - 3.0 * p.x * p.y * p.y; };
    t.grad = [](const Vec3& p) { return Vec3{3.0 * p.x * p.x - 3.0 * p.y * p.y, -6.0 * p.x * p.y, 0.0}; };
    return harmonic_zero(std::move(t));
  }
  if (family == "poisson-quadratic") {
    t.u = [](const Vec3& p) { return 0.25 * (p.x * p.x + p.y * p.y); };
    t.grad = [](const Vec3& p) { return Vec3{0.5 * p.x, 0.5 * p.y, 0.0}; };
    t.laplacian = [](const Vec3&) { return 1.0; };
    return t;
  }
  if (family == "poisson-quintic") {
    t.u = [](const Vec3& p) { return std::pow(p.x, 5) + p.y; };
    t.grad = [](const Vec3& p) { return Vec3{5.0 * std::pow(p.x, 4), 1.0, 0.0}; };
    t.laplacian = [](const Vec3& p) { return 20.0 * p.x * p.x * p.x; };
    return t;
  }
  if (family == "helm3d-plane") {
    const double a = std::sqrt(0.2), b = std::sqrt(0.3), c = std::sqrt(0.5);
    t.params = {a, b, c};
    t.u = [=](const Vec3& p) { return std::sin(a * p.x + b * p.y + c * p.z); };
    t.grad = [=](const Vec3& p) {
      const double cs = std::cos(a * p.x + b * p.y + c * p.z);
      return Vec3{a * cs, b * cs, c * cs};
    };
    t.laplacian = [=](const Vec3& p) { return -std::sin(a * p.x + b * p.y + c * p.z); };
    return t;
  }
  if (family == "helm-sinsin" || family == "helm-sinsinh") {
    if (!k || !(*k > 0.0)) throw ConfigError("family " + family + " needs a positive wavenumber");
    const double kk = *k;
    const double p1 = rng.uniform(-kPi, kPi), p2 = rng.uniform(-kPi, kPi);
    if (family == "helm-sinsin") {
      double a, b;
      do {
        a = kk * (1.0 - rng.unit());
        b = std::sqrt(std::max(kk * kk - a * a, 0.0));
      } while (!(b > 0.0));
      t.params = {a, b, p1, p2};
      t.u = [=](const Vec3& p) { return std::sin(a * p.x - p1) * std::sin(b * p.y - p2); };
      t.grad = [=](const Vec3& p) {
        return Vec3{a * std::cos(a * p.x - p1) * std::sin(b * p.y - p2),
                    b * std::sin(a * p.x - p1) * std::cos(b * p.y - p2), 0.0};
      };
      t.laplacian = [=](const Vec3& p) { return -kk * kk * std::sin(a * p.x - p1) * std::sin(b * p.y - p2); };
    } else {
      // c ≤ 2k forces d ≤ √3·k.
      const double d = std::sqrt(3.0) * kk * (1.0 - rng.unit());
      const double c = std::sqrt(kk * kk + d * d);
      t.params = {c, d, p1, p2};
      t.u = [=](const Vec3& p) { return std::sin(c * p.x - p1) * std::sinh(d * p.y - p2); };
      t.grad = [=](const Vec3& p) {
        return Vec3{c * std::cos(c * p.x - p1) * std::sinh(d * p.y - p2),
                    d * std::sin(c * p.x - p1) * std::cosh(d * p.y - p2), 0.0};
      };
      t.laplacian = [=](const Vec3& p) { return -kk * kk * std::sin(c * p.x - p1) * std::sinh(d * p.y - p2); };
    }
    return t;
  }
  throw ConfigError("unknown test family '" + family + "'");
}

bool is_fixed(const std::string& family) {
  return family == "u5" || family == "poisson-quadratic" || family == "poisson-quintic" || family == "helm3d-plane";
}

}  // namespace

std::vector<TestCase> make_test_suite(const std::string& family, const DomainSpec& domain, std::uint64_t seed,
                                      std::size_t count, std::optional<double> k) {
  Rng rng(seed);
  std::vector<TestCase> cases;
  const std::size_t n = is_fixed(family) ? 1 : count;
  for (std::size_t i = 0; i < n; ++i) cases.push_back(make_case(family, domain, rng, k));
  return cases;
}

void write_field_csv(std::ostream& out, const SolutionField& field) {
  out << "x,y,u_pred_re,u_pred_im,u_exact,abs_err,flag\n";
  for (std::size_t i = 0; i < field.points.size(); ++i) {
    const double ex = field.exact.empty() ? kNaN : field.exact[i];
    const double err = std::abs(field.predicted[i].real() - ex);
    out << format_double(field.points[i].x) << ',' << format_double(field.points[i].y) << ','
        << format_double(field.predicted[i].real()) << ',' << format_double(field.predicted[i].imag()) << ','
        << format_double(ex) << ',' << format_double(err) << ',' << static_cast<int>(field.flags[i]) << '\n';
  }
}

}  // namespace dtn
