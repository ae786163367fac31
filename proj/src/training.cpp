#include "dtn/training.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "dtn/error.hpp"
#include "dtn/random.hpp"
#include "dtn/serialization.hpp"

namespace dtn {

void validate(const TrainingConfig& cfg, std::size_t n_samples) {
  if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be a finite non-negative number");
  }
  if (cfg.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (cfg.batch_size > n_samples) {
    throw ConfigError("batch_size " + std::to_string(cfg.batch_size) + " exceeds dataset size " +
                      std::to_string(n_samples));
  }
  if (!(cfg.lambda1 > 0.0) || !(cfg.lambda2 > 0.0)) throw ConfigError("lambda1 and lambda2 must be positive");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) || !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(cfg.adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  for (auto w : cfg.hidden) {
    if (w == 0) throw ConfigError("hidden layer widths must be positive");
  }
}

TrainingData assemble(const Dataset& data, const OperatorLayout& layout) {
  if (layout.n_points != data.grid.size()) {
    throw LayoutError("layout has " + std::to_string(layout.n_points) + " points, dataset grid has " +
                      std::to_string(data.grid.size()));
  }
  const auto rows = static_cast<Eigen::Index>(data.pairs.size());
  TrainingData td{Eigen::MatrixXd(rows, static_cast<Eigen::Index>(layout.input.size())),
                  Eigen::MatrixXd(rows, static_cast<Eigen::Index>(layout.output.size()))};
  const std::size_t ref = layout.reference_point();
  const bool anchor = data.normalization() == NormalizationMode::laplace_mode;
  std::vector<double> g;
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& pair = data.pairs[static_cast<std::size_t>(i)];
    g = pair.g;
    if (anchor) {
      const double c = g[ref];
      for (auto& v : g) v -= c;
    }
    td.inputs.row(i) = gather(layout.input, g, pair.h).transpose();
    td.targets.row(i) = gather(layout.output, g, pair.h).transpose();
  }
  return td;
}

Eigen::VectorXd slot_weights(const OperatorLayout& layout, double lambda1, double lambda2) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(layout.output.size()));
  for (std::size_t i = 0; i < layout.output.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = layout.output[i].kind == TraceKind::neumann ? lambda1 : lambda2;
  }
  return w;
}

namespace {

void check_batch(const LinearBoundaryOperator& op, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                 const Eigen::VectorXd& weights) {
  if (inputs.rows() == 0) throw DimensionError("empty batch");
  if (inputs.rows() != targets.rows()) throw DimensionError("inputs and targets differ in sample count");
  if (static_cast<std::size_t>(inputs.cols()) != op.input_dim() ||
      static_cast<std::size_t>(targets.cols()) != op.output_dim() ||
      static_cast<std::size_t>(weights.size()) != op.output_dim()) {
    throw DimensionError("batch shape does not match the operator");
  }
}

double weighted_sq(const Eigen::MatrixXd& residual, const Eigen::VectorXd& weights) {
  return (residual.array().square().rowwise() * weights.transpose().array()).sum() /
         static_cast<double>(residual.rows() * residual.cols());
}

}  // namespace

double compute_loss(const LinearBoundaryOperator& op, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                    const Eigen::VectorXd& weights) {
  check_batch(op, inputs, targets, weights);
  const Eigen::MatrixXd residual = op.apply_rows(inputs) - targets;
  return weighted_sq(residual, weights);
}

namespace {

// Samples are stored one per column. Forward pass keeping every activation,
// then backward through the stack. Returns the loss; `grads` receives one
// matrix per layer.
double loss_and_gradient(const std::vector<Eigen::MatrixXd>& layers, const Eigen::MatrixXd& inputs_t,
                         const Eigen::MatrixXd& targets_t, const Eigen::VectorXd& weights,
                         std::vector<Eigen::MatrixXd>& grads) {
  const std::size_t depth = layers.size();
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(depth);
  const Eigen::MatrixXd* prev = &inputs_t;
  for (std::size_t j = 0; j + 1 < depth; ++j) {
    acts.push_back(layers[j] * *prev);
    prev = &acts.back();
  }
  Eigen::MatrixXd delta(layers.back().rows(), inputs_t.cols());
  delta.noalias() = layers.back() * *prev;
  delta -= targets_t;
  const double count = static_cast<double>(delta.rows() * delta.cols());
  const double loss = (delta.array().square().colwise() * weights.array()).sum() / count;
  delta.array().colwise() *= (2.0 / count) * weights.array();

  grads.resize(depth);
  for (std::size_t j = depth; j-- > 0;) {
    const Eigen::MatrixXd& a = j == 0 ? inputs_t : acts[j - 1];
    grads[j].noalias() = delta * a.transpose();
    if (j > 0) delta = layers[j].transpose() * delta;
  }
  return loss;
}

}  // namespace

std::vector<Eigen::MatrixXd> loss_gradient(const LinearBoundaryOperator& op, const Eigen::MatrixXd& inputs,
                                           const Eigen::MatrixXd& targets, const Eigen::VectorXd& weights) {
  check_batch(op, inputs, targets, weights);
  std::vector<Eigen::MatrixXd> grads;
  loss_and_gradient(op.layers(), inputs.transpose(), targets.transpose(), weights, grads);
  return grads;
}

namespace {

std::vector<Eigen::MatrixXd> initial_layers(std::size_t in, std::size_t out, const TrainingConfig& cfg) {
  std::vector<std::size_t> widths{in};
  widths.insert(widths.end(), cfg.hidden.begin(), cfg.hidden.end());
  widths.push_back(out);
  std::vector<Eigen::MatrixXd> layers;
  if (widths.size() == 2) {
    layers.push_back(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)));
    return layers;
  }
  Rng rng = Rng::stream(cfg.seed, 0xC0FFEE);
  for (std::size_t j = 0; j + 1 < widths.size(); ++j) {
    const double bound = std::sqrt(6.0 / static_cast<double>(widths[j]));
    Eigen::MatrixXd m(static_cast<Eigen::Index>(widths[j + 1]), static_cast<Eigen::Index>(widths[j]));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
    }
    layers.push_back(std::move(m));
  }
  return layers;
}

}  // namespace

TrainResult train_adam(const Dataset& data, const OperatorLayout& layout, const TrainingConfig& cfg,
                       std::ostream* log) {
  return train_adam(assemble(data, layout), data.spec.kernel, layout, cfg, log);
}

TrainResult train_adam(const TrainingData& td, const KernelSpec& kernel, const OperatorLayout& layout,
                       const TrainingConfig& cfg, std::ostream* log) {
  const auto n = static_cast<std::size_t>(td.inputs.rows());
  validate(cfg, n);
  const auto start = std::chrono::steady_clock::now();

  LinearBoundaryOperator op(kernel, layout, initial_layers(layout.input.size(), layout.output.size(), cfg));
  auto& layers = op.layers();
  const Eigen::VectorXd weights = slot_weights(layout, cfg.lambda1, cfg.lambda2);

  std::vector<Eigen::MatrixXd> m1, m2, grads, best = layers;
  for (const auto& l : layers) {
    m1.push_back(Eigen::MatrixXd::Zero(l.rows(), l.cols()));
    m2.push_back(Eigen::MatrixXd::Zero(l.rows(), l.cols()));
  }

  TrainReport report;
  report.best_loss = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  const Eigen::MatrixXd inputs_t = td.inputs.transpose();
  const Eigen::MatrixXd targets_t = td.targets.transpose();
  Eigen::MatrixXd xb, yb;
  double b1t = 1.0, b2t = 1.0;
  if (log) *log << "epoch,mean_loss,best_loss\n";

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_sum = 0.0;
    for (std::size_t first = 0; first < n; first += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, n - first);
      xb.resize(inputs_t.rows(), static_cast<Eigen::Index>(count));
      yb.resize(targets_t.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t c = 0; c < count; ++c) {
        xb.col(static_cast<Eigen::Index>(c)) = inputs_t.col(static_cast<Eigen::Index>(order[first + c]));
        yb.col(static_cast<Eigen::Index>(c)) = targets_t.col(static_cast<Eigen::Index>(order[first + c]));
      }
      const double loss = loss_and_gradient(layers, xb, yb, weights, grads);
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(report.steps + 1));
      }
      epoch_sum += loss * static_cast<double>(count);

      ++report.steps;
      b1t *= cfg.adam_beta1;
      b2t *= cfg.adam_beta2;
      const double step = cfg.learning_rate / (1.0 - b1t);
      const double corr2 = 1.0 / (1.0 - b2t);
      for (std::size_t j = 0; j < layers.size(); ++j) {
        m1[j] = cfg.adam_beta1 * m1[j] + (1.0 - cfg.adam_beta1) * grads[j];
        m2[j] = cfg.adam_beta2 * m2[j] + (1.0 - cfg.adam_beta2) * grads[j].cwiseAbs2();
        layers[j].array() -= step * m1[j].array() / ((m2[j].array() * corr2).sqrt() + cfg.adam_eps);
      }
    }
    const double mean = epoch_sum / static_cast<double>(n);
    report.epoch_loss.push_back(mean);
    if (mean < report.best_loss) {
      report.best_loss = mean;
      report.best_epoch = epoch;
      if (cfg.checkpoint_on_best) best = layers;
    }
    if (log) *log << epoch << ',' << format_double(mean) << ',' << format_double(report.best_loss) << '\n';
  }
  if (cfg.checkpoint_on_best && cfg.epochs > 0) layers = best;
  if (cfg.epochs == 0) report.best_loss = compute_loss(op, td.inputs, td.targets, weights);
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(op), std::move(report)};
}

LeastSquaresResult fit_least_squares(const Dataset& data, const OperatorLayout& layout) {
  return fit_least_squares(assemble(data, layout), data.spec.kernel, layout);
}

LeastSquaresResult fit_least_squares(const TrainingData& td, const KernelSpec& kernel, const OperatorLayout& layout) {
  if (td.inputs.rows() == 0) throw DimensionError("empty dataset");
  if (static_cast<std::size_t>(td.inputs.cols()) != layout.input.size() ||
      static_cast<std::size_t>(td.targets.cols()) != layout.output.size()) {
    throw LayoutError("training matrices do not match the layout");
  }
  const auto n = td.inputs.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(td.inputs.transpose());
  gram = gram.selfadjointView<Eigen::Lower>();
  const double trace = gram.trace();
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw IllConditionedError("Gram matrix is zero or non-finite", std::numeric_limits<double>::infinity());
  }
  const double ridge = 1e-10 * trace / static_cast<double>(n);
  gram.diagonal().array() += ridge;

  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly).eigenvalues();
  const double condition = eig.maxCoeff() / eig.minCoeff();
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success || !(eig.minCoeff() > 0.0) || !(condition < 1e15)) {
    throw IllConditionedError("normal equations are singular even with ridge " + format_double(ridge), condition);
  }
  const Eigen::MatrixXd wt = llt.solve(td.inputs.transpose() * td.targets);
  LeastSquaresResult result{LinearBoundaryOperator(kernel, layout, {wt.transpose()}), ridge, condition, 0.0};
  result.loss = compute_loss(result.op, td.inputs, td.targets, slot_weights(layout, 1.0, 1.0));
  return result;
}

}  // namespace dtn
