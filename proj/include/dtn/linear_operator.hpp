#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dtn/geometry.hpp"
#include "dtn/kernels.hpp"
#include "dtn/synthesis.hpp"

namespace dtn {

enum class TraceKind : std::uint8_t { dirichlet, neumann };

/// One entry of an operator input or output vector: which boundary point and
/// which trace it carries.
struct Slot {
  std::uint32_t point = 0;
  TraceKind kind = TraceKind::dirichlet;
  friend bool operator==(const Slot&, const Slot&) = default;
};

/// Input/output vector layout of a boundary operator.
///
/// Mixed problems: input = [g on Γ_D, h on Γ_N], output = [h on Γ_D, g on Γ_N],
/// each part in grid order. The pure Dirichlet problem is the special case
/// Γ_D = ∂Ω.
struct OperatorLayout {
  std::size_t n_points = 0;
  std::vector<Slot> input;
  std::vector<Slot> output;

  static OperatorLayout dirichlet_to_neumann(std::size_t n_points);
  /// `dirichlet[p]` marks boundary point p as carrying Dirichlet data.
  static OperatorLayout mixed(const std::vector<bool>& dirichlet);

  /// Grid index whose Dirichlet value anchors the constant subtraction: the
  /// first Dirichlet input slot, or 0 when there is none.
  std::size_t reference_point() const;

  friend bool operator==(const OperatorLayout&, const OperatorLayout&) = default;
};

/// Gather the layout's input or output vector from full traces.
Eigen::VectorXd gather(std::span<const Slot> slots, std::span<const double> g, std::span<const double> h);

/// Bias-free stack of dense layers; apply(v) = L_k ⋯ L_1 v.
class LinearBoundaryOperator {
 public:
  LinearBoundaryOperator() = default;
  LinearBoundaryOperator(KernelSpec kernel, OperatorLayout layout, std::vector<Eigen::MatrixXd> layers);

  /// Single zero layer of shape output × input.
  static LinearBoundaryOperator zeros(KernelSpec kernel, OperatorLayout layout);

  const KernelSpec& kernel() const { return kernel_; }
  const OperatorLayout& layout() const { return layout_; }
  const std::vector<Eigen::MatrixXd>& layers() const { return layers_; }
  std::vector<Eigen::MatrixXd>& layers() { return layers_; }

  std::size_t input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().cols()); }
  std::size_t output_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().rows()); }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
  std::vector<double> apply(std::span<const double> v) const;
  /// Row-wise application: each row of `inputs` is one input vector.
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& inputs) const;
  /// Product of all layers.
  Eigen::MatrixXd effective_matrix() const;

  /// Throws LayoutError unless the operator was built for this layout and
  /// kernel family.
  void check_compatible(const OperatorLayout& layout, const KernelSpec& kernel) const;

 private:
  void check_shapes() const;

  KernelSpec kernel_;
  OperatorLayout layout_;
  std::vector<Eigen::MatrixXd> layers_;
};

/// JSON model file: kernel, layout, layer shapes and row-major entries.
void save_model(std::ostream& out, const LinearBoundaryOperator& op);
LinearBoundaryOperator load_model(std::istream& in);

}  // namespace dtn
