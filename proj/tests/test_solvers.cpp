#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dtn/error.hpp"
#include "dtn/serialization.hpp"
#include "dtn/solvers.hpp"
#include "dtn/training.hpp"

using namespace dtn;

namespace {

struct Fixture {
  DomainSpec domain = DomainSpec::unit_square();
  BoundaryGrid grid = make_boundary_grid(domain, 400);
};

LinearBoundaryOperator fit(const KernelSpec& kernel, const OperatorLayout& layout, std::size_t samples,
                           std::uint64_t seed) {
  DatasetSpec spec;
  spec.kernel = kernel;
  spec.n_samples = samples;
  spec.seed = seed;
  return fit_least_squares(build_dataset(spec), layout).op;
}

const LinearBoundaryOperator& laplace_op() {
  static const auto op = fit(KernelSpec::laplace(), OperatorLayout::dirichlet_to_neumann(400), 800, 1);
  return op;
}

SolverContext context(const KernelSpec& kernel, std::size_t resolution = 30) {
  Fixture fx;
  return SolverContext(kernel, fx.domain, fx.grid, make_evaluation_grid(fx.domain, resolution));
}

}  // namespace

TEST_CASE("relative L2 error") {
  const std::vector<double> e{1.0, -2.0, 3.0};
  CHECK(relative_l2(e, e) == 0.0);
  CHECK(relative_l2(std::vector<double>{2.0, -4.0, 6.0}, e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(relative_l2(std::vector<double>{0.0, 0.0, 0.0}, e) == 1.0);
  CHECK_THROWS_AS(relative_l2(e, std::vector<double>{0.0, 0.0, 0.0}), UndefinedMetricError);
  CHECK_THROWS_AS(relative_l2(e, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("evaluation grid masks and flags") {
  const auto eval = make_evaluation_grid(DomainSpec::unit_square(), 100, 0.05);
  REQUIRE(eval.points.size() == 10000);
  CHECK(eval.points.front() == Vec3{0, 0, 0});
  CHECK(eval.points.back() == Vec3{1, 1, 0});
  std::size_t ok = 0, outside = 0;
  for (std::size_t i = 0; i < eval.points.size(); ++i) {
    const auto& p = eval.points[i];
    const double d = std::min({p.x, p.y, 1 - p.x, 1 - p.y});
    if (eval.flags[i] == PointFlag::ok) {
      ++ok;
      CHECK(d >= 0.05);
    }
    if (eval.flags[i] == PointFlag::outside) ++outside;
  }
  CHECK(outside == 396);
  CHECK(ok > 8000);
  const auto flower = make_evaluation_grid(domain_preset("flower"), 40);
  for (std::size_t i = 0; i < flower.points.size(); ++i)
    CHECK((flower.flags[i] == PointFlag::outside) == !contains(domain_preset("flower"), flower.points[i]));
}

TEST_CASE("test families") {
  const auto domain = DomainSpec::unit_square();
  CHECK(std::log(2.5 * 2.5 + 3.5 * 3.5) == doctest::Approx(2.9178).epsilon(1e-4));
  for (const auto& c : make_test_suite("u1", domain, 5)) {
    const double m = c.params[0], n = c.params[1];
    CHECK(std::abs(m) <= 4.0);
    CHECK(std::abs(n) <= 4.0);
    CHECK_FALSE(contains(domain, {m, n, 0}));
    CHECK(distance_to_boundary(domain, {m, n, 0}) >= 0.1);
    CHECK(c.u({0.5, 0.5, 0}) == std::log((0.5 - m) * (0.5 - m) + (0.5 - n) * (0.5 - n)));
  }
  const auto u4 = make_test_suite("u4", domain, 5, 3);
  CHECK(u4.size() == 3);
  for (const auto& c : u4) CHECK(c.u({1, 1, 0}) == doctest::Approx(c.params[0] + c.params[1]));
  CHECK(make_test_suite("u5", domain, 5).size() == 1);

  // Every family satisfies its PDE: five-point Laplacian against c.laplacian.
  const double step = 1e-3;
  auto lap = [&](const TestCase& c, const Vec3& p) {
    return (c.u(p + Vec3{step, 0, 0}) + c.u(p - Vec3{step, 0, 0}) + c.u(p + Vec3{0, step, 0}) +
            c.u(p - Vec3{0, step, 0}) - 4 * c.u(p)) /
           (step * step);
  };
  std::vector<TestCase> all;
  for (const auto& f : laplace_families())
    for (auto& c : make_test_suite(f, domain, 3, 4)) all.push_back(c);
  for (const char* f : {"poisson-quadratic", "poisson-quintic"})
    for (auto& c : make_test_suite(f, domain, 3)) all.push_back(c);
  for (double k : {1.0, 10.0})
    for (const char* f : {"helm-sinsin", "helm-sinsinh"})
      for (auto& c : make_test_suite(f, domain, 3, 4, k)) all.push_back(c);
  for (const auto& c : all) {
    for (const Vec3& p : {Vec3{0.3, 0.4, 0}, Vec3{0.8, 0.6, 0}}) {
      const double scale = std::max(1.0, std::abs(c.laplacian(p)));
      INFO(c.family);
      CHECK(std::abs(lap(c, p) - c.laplacian(p)) < 1e-3 * scale * std::max(1.0, std::abs(c.u(p))));
      const Vec3 g = c.grad(p);
      const double fx = (c.u(p + Vec3{1e-6, 0, 0}) - c.u(p - Vec3{1e-6, 0, 0})) / 2e-6;
      CHECK(std::abs(fx - g.x) < 1e-5 * std::max(1.0, std::abs(g.x)));
    }
  }
}

TEST_CASE("Helmholtz family parameters satisfy the wavenumber constraints") {
  const auto domain = DomainSpec::unit_square();
  for (double k : {1.0, 10.0, 100.0}) {
    for (const auto& c : make_test_suite("helm-sinsin", domain, 9, 20, k)) {
      const double a = c.params[0], b = c.params[1];
      CHECK(a > 0.0);
      CHECK(a <= k);
      CHECK(b > 0.0);
      CHECK(b <= k);
      CHECK(a * a + b * b == doctest::Approx(k * k).epsilon(1e-12));
    }
    for (const auto& c : make_test_suite("helm-sinsinh", domain, 9, 20, k)) {
      const double cc = c.params[0], d = c.params[1];
      CHECK(d > 0.0);
      CHECK(cc > d);
      CHECK(cc <= 2 * k + 1e-12);
      CHECK(cc * cc - d * d == doctest::Approx(k * k).epsilon(1e-12));
    }
  }
  CHECK(std::sqrt(102.0) * std::sqrt(102.0) - 2.0 == doctest::Approx(100.0));
  CHECK(36.0 + 64.0 == 100.0);
  const auto plane = make_test_suite("helm3d-plane", domain_preset("sphere"), 1);
  double sq = 0.0;
  for (double v : plane[0].params) sq += v * v;
  CHECK(sq == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(make_test_suite("helm-sinsin", domain, 1), ConfigError);
  CHECK_THROWS_AS(make_test_suite("nope", domain, 1), ConfigError);
}

TEST_CASE("Dirichlet pipeline on harmonic data") {
  const auto ctx = context(KernelSpec::laplace());
  const auto& op = laplace_op();
  for (const auto& c : make_test_suite("u1", ctx.domain(), 7, 3)) {
    const auto s = solve_dirichlet(op, ctx, c.dirichlet(ctx.grid()), c.u);
    CHECK(s.field.error < 1e-2);
    CHECK(relative_l2(s.h, c.neumann(ctx.grid())) < 5e-2);
  }
  // Constant data: the predicted flux vanishes and the field is the constant.
  const std::vector<double> g(400, 3.0);
  const auto s = solve_dirichlet(op, ctx, g, [](const Vec3&) { return 3.0; });
  CHECK(s.field.error < 1e-2);
  for (double v : s.h) CHECK(v == 0.0);
}

TEST_CASE("scale equivariance of the Dirichlet and Helmholtz pipelines") {
  const auto ctx = context(KernelSpec::laplace());
  const auto c = make_test_suite("u2", ctx.domain(), 4, 1)[0];
  const auto g = c.dirichlet(ctx.grid());
  std::vector<double> g2(g);
  for (auto& v : g2) v *= 2.0;
  const auto a = solve_dirichlet(laplace_op(), ctx, g);
  const auto b = solve_dirichlet(laplace_op(), ctx, g2);
  for (auto i : ctx.interior()) CHECK(std::abs(b.field.predicted[i] - 2.0 * a.field.predicted[i]) < 1e-12 * (1 + std::abs(a.field.predicted[i])));

  const auto hop = fit(KernelSpec::helmholtz2d(1.0), OperatorLayout::dirichlet_to_neumann(400), 800, 2);
  const auto hctx = context(KernelSpec::helmholtz2d(1.0));
  const auto hc = make_test_suite("helm-sinsin", hctx.domain(), 4, 1, 1.0)[0];
  const auto hg = hc.dirichlet(hctx.grid());
  std::vector<double> hg2(hg);
  for (auto& v : hg2) v *= 2.0;
  const auto ha = solve_helmholtz(hop, hctx, 1.0, hg, hc.u);
  const auto hb = solve_helmholtz(hop, hctx, 1.0, hg2);
  for (auto i : hctx.interior()) CHECK(std::abs(hb.field.predicted[i] - 2.0 * ha.field.predicted[i]) < 1e-12 * (1 + std::abs(ha.field.predicted[i])));
  CHECK(ha.field.error < 5e-2);
  CHECK(ha.field.imaginary_ratio < 1e-3);

  CHECK_THROWS_AS(solve_helmholtz(hop, hctx, 10.0, hg), ConfigError);
  CHECK_THROWS_AS(solve_dirichlet(hop, ctx, g), LayoutError);
}

TEST_CASE("Poisson with zero source reduces to the Dirichlet solve") {
  const auto ctx = context(KernelSpec::laplace());
  const VolumeQuadrature quad(triangulate_square(0.05));
  const auto c = make_test_suite("u4", ctx.domain(), 2, 1)[0];
  const auto g = c.dirichlet(ctx.grid());
  const auto d = solve_dirichlet(laplace_op(), ctx, g, c.u);
  const auto p = solve_poisson(laplace_op(), ctx, quad, [](const Vec3&) { return 0.0; }, g, c.u);
  CHECK(p.h == d.h);
  CHECK(p.field.flags == d.field.flags);
  CHECK(p.field.error == d.field.error);
  for (std::size_t i = 0; i < d.field.predicted.size(); ++i) {
    if (d.field.flags[i] == PointFlag::outside) continue;
    CHECK(p.field.predicted[i] == d.field.predicted[i]);
  }
}

TEST_CASE("Poisson pipeline on the quadratic solution") {
  const auto ctx = context(KernelSpec::laplace());
  const VolumeQuadrature quad(triangulate_square(0.05));
  const auto c = make_test_suite("poisson-quadratic", ctx.domain(), 0)[0];
  const auto s = solve_poisson(laplace_op(), ctx, quad, c.laplacian, c.dirichlet(ctx.grid()), c.u);
  CHECK(s.field.error < 5e-2);
}

TEST_CASE("mixed solve passes known data through") {
  const auto ctx = context(KernelSpec::laplace());
  const auto mask = MixedPartition::dirichlet_on({1}).dirichlet_mask(ctx.grid());
  const auto layout = OperatorLayout::mixed(mask);
  const auto op = fit(KernelSpec::laplace(), layout, 800, 3);
  const auto c = make_test_suite("u4", ctx.domain(), 11, 1)[0];
  const auto g = c.dirichlet(ctx.grid());
  const auto h = c.neumann(ctx.grid());
  const auto s = solve_mixed(op, ctx, mask, g, h, c.u);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      CHECK(s.g[i] == g[i]);
    } else {
      CHECK(s.h[i] == h[i]);
    }
  }
  CHECK(s.field.error < 5e-2);
  CHECK_THROWS_AS(solve_mixed(laplace_op(), ctx, mask, g, h), LayoutError);
}

TEST_CASE("mixed partitions") {
  const auto p = MixedPartition::parse("D,N,N,N");
  CHECK(p.to_string() == "D,N,N,N");
  CHECK(MixedPartition::dirichlet_on({1, 3}).to_string() == "D,N,D,N");
  CHECK_THROWS_AS(MixedPartition::parse("D,N,X,N"), ConfigError);
  CHECK_THROWS_AS(MixedPartition::parse("D,N"), ConfigError);
  CHECK_THROWS_AS(MixedPartition::parse("D,D,D,D").validate(true), ConfigError);
  CHECK_NOTHROW(MixedPartition::parse("D,D,D,D").validate(false));
  const auto grid = make_boundary_grid(DomainSpec::unit_square(), 400);
  const auto mask = p.dirichlet_mask(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(mask[i] == (grid.segment[i] == 1));
}

TEST_CASE("3D boundary prediction is linear") {
  const auto grid = make_boundary_grid(domain_preset("sphere"), 60);
  Eigen::MatrixXd w = Eigen::MatrixXd::Random(60, 60);
  const LinearBoundaryOperator op(KernelSpec::helmholtz3d(1.0), OperatorLayout::dirichlet_to_neumann(60), {w});
  const auto c = make_test_suite("helm3d-plane", domain_preset("sphere"), 0)[0];
  const auto g = c.dirichlet(grid);
  std::vector<double> g2(g);
  for (auto& v : g2) v *= 2.0;
  const auto a = predict_normal_derivative_3d(op, grid, g, c.neumann(grid));
  const auto b = predict_normal_derivative_3d(op, grid, g2, {});
  for (std::size_t i = 0; i < 60; ++i) CHECK(b.h[i] == 2.0 * a.h[i]);
  CHECK(a.rel_error > 0.0);
  CHECK_THROWS_AS(predict_normal_derivative_3d(op, make_boundary_grid(domain_preset("sphere"), 50), g, {}), LayoutError);
}

TEST_CASE("field CSV") {
  const auto ctx = context(KernelSpec::laplace(), 5);
  const auto c = make_test_suite("u5", ctx.domain(), 0)[0];
  const auto s = solve_dirichlet(laplace_op(), ctx, c.dirichlet(ctx.grid()), c.u);
  std::ostringstream out;
  write_field_csv(out, s.field);
  const std::string text = out.str();
  CHECK(text.rfind("x,y,u_pred_re,u_pred_im,u_exact,abs_err,flag\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 26);
}
