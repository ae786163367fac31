#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "dtn/linear_operator.hpp"
#include "dtn/synthesis.hpp"

namespace dtn {

struct TrainingConfig {
  double learning_rate = 1e-4;
  std::size_t batch_size = 1000;
  std::size_t epochs = 50000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Weight of output slots on Γ_D (predicted h).
  double lambda1 = 1.0;
  /// Weight of output slots on Γ_N (predicted g).
  double lambda2 = 1.0;
  std::uint64_t seed = 0;
  bool checkpoint_on_best = true;
  /// Widths of hidden linear layers; empty = single n×n matrix.
  std::vector<std::size_t> hidden;
};

/// Throws ConfigError on invalid settings. `n_samples` is the dataset size.
void validate(const TrainingConfig& cfg, std::size_t n_samples);

struct TrainReport {
  std::vector<double> epoch_loss;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  std::size_t steps = 0;
  double wall_time = 0.0;
};

/// Row-per-sample training matrices for a layout.
struct TrainingData {
  Eigen::MatrixXd inputs;   // samples × input_dim
  Eigen::MatrixXd targets;  // samples × output_dim
};

/// Gather inputs and targets. Each pair's g is re-anchored so that
/// g[layout.reference_point()] = 0, which matches the inference-time
/// normalization of mixed problems.
TrainingData assemble(const Dataset& data, const OperatorLayout& layout);

/// Per-output-slot loss weight (λ1 on predicted h, λ2 on predicted g).
Eigen::VectorXd slot_weights(const OperatorLayout& layout, double lambda1, double lambda2);

/// Batch mean of the weighted squared error divided by the output dimension.
double compute_loss(const LinearBoundaryOperator& op, const Eigen::MatrixXd& inputs,
                    const Eigen::MatrixXd& targets, const Eigen::VectorXd& weights);

/// Loss gradient with respect to every layer, same shapes as op.layers().
std::vector<Eigen::MatrixXd> loss_gradient(const LinearBoundaryOperator& op, const Eigen::MatrixXd& inputs,
                                           const Eigen::MatrixXd& targets, const Eigen::VectorXd& weights);

struct TrainResult {
  LinearBoundaryOperator op;
  TrainReport report;
};

/// Mini-batch Adam. A single layer starts at zero; stacked layers use a
/// seeded uniform init with bound sqrt(6 / fan_in). `log`, when given,
/// receives `epoch,mean_loss,best_loss` rows.
TrainResult train_adam(const Dataset& data, const OperatorLayout& layout, const TrainingConfig& cfg,
                       std::ostream* log = nullptr);
TrainResult train_adam(const TrainingData& td, const KernelSpec& kernel, const OperatorLayout& layout,
                       const TrainingConfig& cfg, std::ostream* log = nullptr);

struct LeastSquaresResult {
  LinearBoundaryOperator op;
  double ridge = 0.0;
  double condition = 0.0;
  double loss = 0.0;
};

/// Ridge-regularized normal equations (GᵀG + εI) Wᵀ = GᵀH with
/// ε = 1e-10 · trace(GᵀG) / n.
LeastSquaresResult fit_least_squares(const Dataset& data, const OperatorLayout& layout);
LeastSquaresResult fit_least_squares(const TrainingData& td, const KernelSpec& kernel, const OperatorLayout& layout);

}  // namespace dtn
