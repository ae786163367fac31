#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dtn/error.hpp"
#include "dtn/quadrature.hpp"
#include "dtn/serialization.hpp"
#include "dtn/solvers.hpp"
#include "dtn/synthesis.hpp"
#include "dtn/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dtn;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << bytes;
  if (!out) throw ConfigError("failed writing " + p.string());
}

// Config echo, seed and FNV-1a hashes of every artifact written by the command.
void write_provenance(const fs::path& where, const CLI::App& sub, std::uint64_t seed,
                      const std::vector<fs::path>& artifacts) {
  json j;
  j["command"] = sub.get_name();
  j["config"] = sub.config_to_str(true, false);
  j["seed"] = seed;
  json hashes = json::object();
  for (const auto& a : artifacts) hashes[a.filename().string()] = hex64(fnv1a(read_file(a)));
  j["artifacts"] = hashes;
  write_file(where, j.dump(2) + "\n");
}

KernelSpec kernel_for(const std::string& equation, double k) {
  if (equation == "laplace" || equation == "poisson") return KernelSpec::laplace();
  if (equation == "helmholtz") return KernelSpec::helmholtz2d(k);
  if (equation == "helmholtz3d") return KernelSpec::helmholtz3d(k);
  throw ConfigError("unknown equation '" + equation + "' (laplace, poisson, helmholtz, helmholtz3d)");
}

// "square400" -> (square, 400)
std::pair<DomainSpec, std::size_t> parse_grid_name(const std::string& name) {
  const auto pos = name.find_first_of("0123456789");
  if (pos == std::string::npos || pos == 0) throw ConfigError("grid name must look like square400");
  return {domain_preset(name.substr(0, pos)), static_cast<std::size_t>(std::stoul(name.substr(pos)))};
}

std::vector<double> read_column(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    try {
      std::size_t used = 0;
      v.push_back(std::stod(line, &used));
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw ParseError("not a number: '" + line + "' in " + p.string(), lineno);
    }
  }
  return v;
}

std::vector<std::string> suite_families(const std::string& suite) {
  if (suite == "laplace" || suite == "laplace-u1..u5") return laplace_families();
  if (suite == "poisson") return {"poisson-quadratic", "poisson-quintic"};
  if (suite == "helmholtz") return {"helm-sinsin", "helm-sinsinh"};
  if (suite == "helmholtz3d") return {"helm3d-plane"};
  std::vector<std::string> out;
  std::stringstream ss(suite);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.rfind("laplace-", 0) == 0) item = item.substr(8);
    out.push_back(item);
  }
  return out;
}

LinearBoundaryOperator read_model(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read model " + p.string());
  return load_model(in);
}

struct GenOptions {
  std::string equation = "laplace";
  double k = 1.0;
  std::string domain = "square";
  std::size_t n = 400;
  std::size_t samples = 10000;
  std::size_t kernels = 3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
};

int cmd_gen(const GenOptions& o, const CLI::App& sub) {
  DatasetSpec spec;
  spec.kernel = kernel_for(o.equation, o.k);
  spec.domain = domain_preset(o.domain);
  spec.n_points = o.n;
  spec.n_samples = o.samples;
  spec.n_kernels_per_sample = o.kernels;
  spec.seed = o.seed;
  spec.adapt_box_to_domain();
  const Dataset data = build_dataset(spec, o.threads);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  save_dataset(data, dir / "dataset");
  write_provenance(dir / "provenance.json", sub, o.seed, {dir / "dataset.csv", dir / "dataset.json"});
  std::cout << "samples " << data.pairs.size() << " checksum " << hex64(dataset_checksum(data)) << " normalization "
            << to_string(data.normalization()) << '\n';
  return 0;
}

struct TrainOptions {
  std::string data;
  std::string method = "adam";
  std::size_t epochs = 10000;
  double lr = 1e-4;
  std::size_t batch = 1000;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden;
  std::string partition;
  bool no_checkpoint = false;
  std::string out;
  std::string log;
};

int cmd_train(const TrainOptions& o, const CLI::App& sub) {
  const Dataset data = load_dataset(fs::path(o.data) / "dataset");
  OperatorLayout layout = OperatorLayout::dirichlet_to_neumann(data.grid.size());
  if (!o.partition.empty()) {
    const auto part = MixedPartition::parse(o.partition);
    part.validate(true);
    layout = OperatorLayout::mixed(part.dirichlet_mask(data.grid));
  }
  const fs::path model_path(o.out);
  std::vector<fs::path> artifacts{model_path};
  LinearBoundaryOperator op;
  if (o.method == "ls") {
    auto ls = fit_least_squares(data, layout);
    std::cout << "least squares: loss " << format_double(ls.loss) << " ridge " << format_double(ls.ridge)
              << " condition " << format_double(ls.condition) << '\n';
    op = std::move(ls.op);
  } else if (o.method == "adam") {
    TrainingConfig cfg;
    cfg.learning_rate = o.lr;
    cfg.batch_size = o.batch;
    cfg.epochs = o.epochs;
    cfg.lambda1 = o.lambda1;
    cfg.lambda2 = o.lambda2;
    cfg.seed = o.seed;
    cfg.hidden = o.hidden;
    cfg.checkpoint_on_best = !o.no_checkpoint;
    const fs::path log_path = o.log.empty() ? fs::path(model_path.string() + ".log.csv") : fs::path(o.log);
    std::ostringstream log;
    auto result = train_adam(data, layout, cfg, &log);
    write_file(log_path, log.str());
    artifacts.push_back(log_path);
    std::cout << "adam: best loss " << format_double(result.report.best_loss) << " at epoch "
              << result.report.best_epoch << " (" << result.report.steps << " steps, "
              << result.report.wall_time << " s)\n";
    op = std::move(result.op);
  } else {
    throw ConfigError("--method must be adam or ls");
  }
  std::ostringstream model;
  save_model(model, op);
  write_file(model_path, model.str());
  write_provenance(fs::path(model_path.string() + ".provenance.json"), sub, o.seed, artifacts);
  return 0;
}

struct EvalOptions {
  std::string model;
  std::string suite = "laplace";
  std::string domain = "square";
  std::string partition;
  std::uint64_t seed = 7;
  std::size_t count = 10;
  std::size_t resolution = 100;
  double margin = 0.05;
  double mesh_h = 0.02;
  double r0 = 0.01;
  std::string out;
};

json field_record(const SolutionField& f) {
  return {{"error", f.error}, {"error_all_interior", f.error_all_interior}, {"imaginary_ratio", f.imaginary_ratio}};
}

int cmd_eval(const EvalOptions& o, const CLI::App& sub) {
  const LinearBoundaryOperator op = read_model(o.model);
  const KernelSpec kernel = op.kernel();
  const fs::path dir(o.out);
  fs::create_directories(dir);
  std::vector<fs::path> artifacts;
  json summary;
  summary["kernel"] = kernel;
  summary["suite"] = o.suite;
  summary["seed"] = o.seed;
  json families = json::object();
  double family_sum = 0.0;
  std::size_t family_count = 0;

  const DomainSpec domain = kernel.dimension() == 3 ? domain_preset("sphere") : domain_preset(o.domain);
  const BoundaryGrid grid = make_boundary_grid(domain, op.layout().n_points);
  std::unique_ptr<SolverContext> ctx;
  if (kernel.dimension() == 2) {
    ctx = std::make_unique<SolverContext>(kernel, domain, grid, make_evaluation_grid(domain, o.resolution, o.margin));
  }
  std::vector<bool> dirichlet;
  if (!o.partition.empty()) {
    const auto part = MixedPartition::parse(o.partition);
    part.validate(true);
    dirichlet = part.dirichlet_mask(grid);
  }

  for (const auto& family : suite_families(o.suite)) {
    const auto cases = make_test_suite(family, domain, o.seed, o.count,
                                       kernel.is_helmholtz() ? std::optional<double>(kernel.k) : std::nullopt);
    json records = json::array();
    double err_sum = 0.0, dudn_sum = 0.0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& c = cases[i];
      const auto g = c.dirichlet(grid);
      const auto h = c.neumann(grid);
      json rec = {{"params", c.params}};
      double err = 0.0;
      if (kernel.dimension() == 3) {
        const auto pred = predict_normal_derivative_3d(op, grid, g, h);
        err = pred.rel_error;
        rec["dudn_error"] = pred.rel_error;
        dudn_sum += pred.rel_error;
        std::ostringstream csv;
        csv << "x,y,z,h_pred,h_exact\n";
        for (std::size_t p = 0; p < grid.size(); ++p) {
          csv << format_double(grid.points[p].x) << ',' << format_double(grid.points[p].y) << ','
              << format_double(grid.points[p].z) << ',' << format_double(pred.h[p]) << ',' << format_double(h[p])
              << '\n';
        }
        const fs::path path = dir / (family + "_" + std::to_string(i) + ".csv");
        write_file(path, csv.str());
        artifacts.push_back(path);
      } else {
        SolutionField field;
        if (!dirichlet.empty()) {
          auto s = solve_mixed(op, *ctx, dirichlet, g, h, c.u);
          rec["dirichlet_error"] = relative_l2(s.g, g);
          rec["neumann_error"] = relative_l2(s.h, h);
          dudn_sum += relative_l2(s.h, h);
          field = std::move(s.field);
        } else if (family.rfind("poisson", 0) == 0) {
          if (domain.shape != Shape::unit_square) throw ConfigError("Poisson evaluation meshes the unit square only");
          const TriMesh mesh = triangulate_square(o.mesh_h);
          const VolumeQuadrature quad(mesh, {o.r0});
          auto s = solve_poisson(op, *ctx, quad, c.laplacian, g, c.u);
          field = std::move(s.field);
        } else {
          auto s = solve_dirichlet(op, *ctx, g, c.u);
          const double dudn = relative_l2(s.h, h);
          rec["dudn_error"] = dudn;
          dudn_sum += dudn;
          field = std::move(s.field);
        }
        err = field.error;
        rec.update(field_record(field));
        std::ostringstream csv;
        write_field_csv(csv, field);
        const fs::path path = dir / (family + "_" + std::to_string(i) + ".csv");
        write_file(path, csv.str());
        artifacts.push_back(path);
      }
      err_sum += err;
      records.push_back(rec);
    }
    const double mean = err_sum / static_cast<double>(cases.size());
    families[family] = {{"cases", records},
                        {"mean_error", mean},
                        {"mean_dudn_error", dudn_sum / static_cast<double>(cases.size())}};
    family_sum += mean;
    ++family_count;
    std::printf("%-18s mean relative L2 %.3e\n", family.c_str(), mean);
  }
  summary["families"] = families;
  summary["mean_over_families"] = family_sum / static_cast<double>(family_count);
  const fs::path summary_path = dir / "summary.json";
  write_file(summary_path, summary.dump(2) + "\n");
  artifacts.push_back(summary_path);
  write_provenance(dir / "provenance.json", sub, o.seed, artifacts);
  return 0;
}

struct SolveOptions {
  std::string model;
  std::string g;
  std::string grid = "square400";
  std::string mesh;
  std::string f;
  std::string h_known;
  std::string partition;
  std::size_t resolution = 100;
  double margin = 0.05;
  double r0 = 0.01;
  std::string out;
};

int cmd_solve(const SolveOptions& o, const CLI::App& sub) {
  const LinearBoundaryOperator op = read_model(o.model);
  const auto [domain, n] = parse_grid_name(o.grid);
  if (domain.dimension() != 2) throw ConfigError("solve handles planar domains; use eval for the sphere");
  const BoundaryGrid grid = make_boundary_grid(domain, n);
  const auto g = read_column(o.g);
  if (g.size() != grid.size()) {
    throw DimensionError(o.g + " has " + std::to_string(g.size()) + " values, grid has " + std::to_string(grid.size()));
  }
  const SolverContext ctx(op.kernel(), domain, grid, make_evaluation_grid(domain, o.resolution, o.margin));
  SolutionField field;
  std::vector<double> h;
  if (!o.partition.empty()) {
    if (o.h_known.empty()) throw ConfigError("mixed problems need --h with Neumann data");
    const auto part = MixedPartition::parse(o.partition);
    part.validate(true);
    auto s = solve_mixed(op, ctx, part.dirichlet_mask(grid), g, read_column(o.h_known));
    field = std::move(s.field);
    h = std::move(s.h);
  } else if (!o.f.empty()) {
    if (o.mesh.empty()) throw ConfigError("a source term needs --mesh");
    std::ifstream mesh_in(o.mesh);
    if (!mesh_in) throw ConfigError("cannot read mesh " + o.mesh);
    const TriMesh mesh = parse_msh(mesh_in);
    const PiecewiseLinearField f(mesh, read_column(o.f));
    const VolumeQuadrature quad(mesh, {o.r0});
    auto s = solve_poisson(op, ctx, quad, std::cref(f), g);
    field = std::move(s.field);
    h = std::move(s.h);
  } else {
    auto s = solve_dirichlet(op, ctx, g);
    field = std::move(s.field);
    h = std::move(s.h);
  }
  std::ostringstream csv;
  write_field_csv(csv, field);
  const fs::path out(o.out);
  write_file(out, csv.str());
  std::ostringstream hcsv;
  hcsv << "h\n";
  for (double v : h) hcsv << format_double(v) << '\n';
  const fs::path h_path(out.string() + ".h.csv");
  write_file(h_path, hcsv.str());
  write_provenance(fs::path(out.string() + ".provenance.json"), sub, 0, {out, h_path});
  return 0;
}

struct QuadOptions {
  std::vector<double> h{0.1, 0.05, 0.02, 0.01};
  std::vector<std::string> kernels;
  double r0 = 0.01;
  std::string out;
};

int cmd_quadbench(const QuadOptions& o, const CLI::App& sub) {
  const auto kernels = o.kernels.empty() ? quadbench_integrands() : o.kernels;
  std::ostringstream csv;
  csv << "integrand,h,computed,reference,rel_error\n";
  for (const auto& k : kernels) {
    for (double h : o.h) {
      const auto row = run_quadbench(k, h, {o.r0});
      csv << '"' << row.integrand << "\"," << format_double(row.h) << ',' << format_double(row.computed) << ','
          << format_double(row.reference) << ',' << format_double(row.rel_error) << '\n';
    }
  }
  if (o.out.empty()) {
    std::cout << csv.str();
  } else {
    write_file(o.out, csv.str());
    write_provenance(fs::path(o.out + ".provenance.json"), sub, 0, {fs::path(o.out)});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary operator learning for elliptic problems"};
  app.set_help_flag("--help", "print this help");
  app.set_config("--config", "", "key=value config file");
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic trace-pair dataset");
  gen_cmd->add_option("--equation", gen.equation, "laplace, poisson, helmholtz or helmholtz3d")->capture_default_str();
  gen_cmd->add_option("--k", gen.k, "wavenumber")->capture_default_str();
  gen_cmd->add_option("--domain", gen.domain, "square, disk, flower, peanut, annulus, sphere")->capture_default_str();
  gen_cmd->add_option("--n", gen.n, "boundary points")->capture_default_str();
  gen_cmd->add_option("--samples", gen.samples, "number of trace pairs")->capture_default_str();
  gen_cmd->add_option("--kernels", gen.kernels, "fundamental solutions per sample")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--threads", gen.threads)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "output directory")->required();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "fit a boundary operator");
  train_cmd->add_option("--data", train.data, "dataset directory")->required();
  train_cmd->add_option("--method", train.method, "adam or ls")->capture_default_str();
  train_cmd->add_option("--epochs", train.epochs)->capture_default_str();
  train_cmd->add_option("--lr", train.lr)->capture_default_str();
  train_cmd->add_option("--batch", train.batch)->capture_default_str();
  train_cmd->add_option("--lambda1", train.lambda1, "weight of predicted Neumann slots")->capture_default_str();
  train_cmd->add_option("--lambda2", train.lambda2, "weight of predicted Dirichlet slots")->capture_default_str();
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--hidden", train.hidden, "hidden linear layer widths");
  train_cmd->add_option("--partition", train.partition, "mixed problem, e.g. D,N,N,N");
  train_cmd->add_flag("--no-checkpoint", train.no_checkpoint, "return the last iterate instead of the best");
  train_cmd->add_option("--out", train.out, "model JSON")->required();
  train_cmd->add_option("--log", train.log, "training log CSV (default <out>.log.csv)");

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "run a test suite against a model");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--suite", eval.suite, "laplace, poisson, helmholtz, helmholtz3d or family list")
      ->capture_default_str();
  eval_cmd->add_option("--domain", eval.domain)->capture_default_str();
  eval_cmd->add_option("--partition", eval.partition, "mixed problem, e.g. D,N,N,N");
  eval_cmd->add_option("--seed", eval.seed)->capture_default_str();
  eval_cmd->add_option("--count", eval.count, "cases per random family")->capture_default_str();
  eval_cmd->add_option("--resolution", eval.resolution)->capture_default_str();
  eval_cmd->add_option("--margin", eval.margin)->capture_default_str();
  eval_cmd->add_option("--mesh-h", eval.mesh_h, "Poisson mesh size")->capture_default_str();
  eval_cmd->add_option("--r0", eval.r0)->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "report directory")->required();

  SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "solve one problem from boundary data");
  solve_cmd->add_option("--model", solve.model)->required();
  solve_cmd->add_option("--g", solve.g, "Dirichlet data, one value per line in grid order")->required();
  solve_cmd->add_option("--grid", solve.grid, "domain preset followed by point count")->capture_default_str();
  solve_cmd->add_option("--h", solve.h_known, "Neumann data for mixed problems");
  solve_cmd->add_option("--partition", solve.partition, "mixed problem, e.g. D,N,N,N");
  solve_cmd->add_option("--mesh", solve.mesh, "MSH 2 mesh for the source term");
  solve_cmd->add_option("--f", solve.f, "source values at mesh vertices");
  solve_cmd->add_option("--resolution", solve.resolution)->capture_default_str();
  solve_cmd->add_option("--margin", solve.margin)->capture_default_str();
  solve_cmd->add_option("--r0", solve.r0)->capture_default_str();
  solve_cmd->add_option("--out", solve.out, "field CSV")->required();

  QuadOptions quad;
  auto* quad_cmd = app.add_subcommand("quadbench", "log-kernel quadrature benchmark");
  quad_cmd->add_option("--h", quad.h, "mesh sizes")->capture_default_str();
  quad_cmd->add_option("--kernel", quad.kernels, "ln(x2+y2) or ln((x-0.5)2+(y-0.5)2)");
  quad_cmd->add_option("--r0", quad.r0)->capture_default_str();
  quad_cmd->add_option("--out", quad.out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen_cmd) return cmd_gen(gen, *gen_cmd);
    if (*train_cmd) return cmd_train(train, *train_cmd);
    if (*eval_cmd) return cmd_eval(eval, *eval_cmd);
    if (*solve_cmd) return cmd_solve(solve, *solve_cmd);
    if (*quad_cmd) return cmd_quadbench(quad, *quad_cmd);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
