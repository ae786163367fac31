#include "dtn/linear_operator.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "dtn/error.hpp"
#include "dtn/serialization.hpp"

namespace dtn {

OperatorLayout OperatorLayout::dirichlet_to_neumann(std::size_t n_points) {
  return mixed(std::vector<bool>(n_points, true));
}

OperatorLayout OperatorLayout::mixed(const std::vector<bool>& dirichlet) {
  OperatorLayout layout;
  layout.n_points = dirichlet.size();
  for (std::uint32_t p = 0; p < dirichlet.size(); ++p) {
    if (dirichlet[p]) {
      layout.input.push_back({p, TraceKind::dirichlet});
      layout.output.push_back({p, TraceKind::neumann});
    }
  }
  for (std::uint32_t p = 0; p < dirichlet.size(); ++p) {
    if (!dirichlet[p]) {
      layout.input.push_back({p, TraceKind::neumann});
      layout.output.push_back({p, TraceKind::dirichlet});
    }
  }
  return layout;
}

std::size_t OperatorLayout::reference_point() const {
  for (const auto& s : input) {
    if (s.kind == TraceKind::dirichlet) return s.point;
  }
  return 0;
}

Eigen::VectorXd gather(std::span<const Slot> slots, std::span<const double> g, std::span<const double> h) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& src = slots[i].kind == TraceKind::dirichlet ? g : h;
    if (slots[i].point >= src.size()) throw DimensionError("slot refers to a point outside the trace");
    v[static_cast<Eigen::Index>(i)] = src[slots[i].point];
  }
  return v;
}

LinearBoundaryOperator::LinearBoundaryOperator(KernelSpec kernel, OperatorLayout layout,
                                               std::vector<Eigen::MatrixXd> layers)
    : kernel_(kernel), layout_(std::move(layout)), layers_(std::move(layers)) {
  check_shapes();
}

LinearBoundaryOperator LinearBoundaryOperator::zeros(KernelSpec kernel, OperatorLayout layout) {
  const auto rows = static_cast<Eigen::Index>(layout.output.size());
  const auto cols = static_cast<Eigen::Index>(layout.input.size());
  return {kernel, std::move(layout), {Eigen::MatrixXd::Zero(rows, cols)}};
}

void LinearBoundaryOperator::check_shapes() const {
  if (layers_.empty()) throw DimensionError("operator needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].cols() != layers_[i - 1].rows()) {
      throw DimensionError("layer " + std::to_string(i) + " does not compose with its predecessor");
    }
  }
  if (input_dim() != layout_.input.size() || output_dim() != layout_.output.size()) {
    throw LayoutError("layer shapes do not match the operator layout");
  }
}

Eigen::VectorXd LinearBoundaryOperator::apply(const Eigen::VectorXd& v) const {
  if (static_cast<std::size_t>(v.size()) != input_dim()) {
    throw DimensionError("input has length " + std::to_string(v.size()) + ", operator expects " +
                         std::to_string(input_dim()));
  }
  Eigen::VectorXd out = v;
  for (const auto& layer : layers_) out = layer * out;
  return out;
}

std::vector<double> LinearBoundaryOperator::apply(std::span<const double> v) const {
  const Eigen::VectorXd in = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  const Eigen::VectorXd out = apply(in);
  return {out.data(), out.data() + out.size()};
}

Eigen::MatrixXd LinearBoundaryOperator::apply_rows(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.cols()) != input_dim()) throw DimensionError("input width mismatch");
  Eigen::MatrixXd out = inputs;
  for (const auto& layer : layers_) out = out * layer.transpose();
  return out;
}

Eigen::MatrixXd LinearBoundaryOperator::effective_matrix() const {
  Eigen::MatrixXd m = layers_.front();
  for (std::size_t i = 1; i < layers_.size(); ++i) m = layers_[i] * m;
  return m;
}

void LinearBoundaryOperator::check_compatible(const OperatorLayout& layout, const KernelSpec& kernel) const {
  if (!(layout == layout_)) throw LayoutError("operator layout does not match the requested boundary layout");
  if (kernel.family != kernel_.family || kernel.k != kernel_.k) {
    throw LayoutError("operator was trained for " + to_string(kernel_.family) + " k=" + format_double(kernel_.k) +
                      ", requested " + to_string(kernel.family) + " k=" + format_double(kernel.k));
  }
}

namespace {

nlohmann::json slots_to_json(const std::vector<Slot>& slots) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : slots) a.push_back({s.point, s.kind == TraceKind::dirichlet ? "g" : "h"});
  return a;
}

std::vector<Slot> slots_from_json(const nlohmann::json& a) {
  std::vector<Slot> slots;
  slots.reserve(a.size());
  for (const auto& e : a) {
    const auto kind = e.at(1).get<std::string>();
    if (kind != "g" && kind != "h") throw LayoutError("slot kind must be 'g' or 'h'");
    slots.push_back({e.at(0).get<std::uint32_t>(), kind == "g" ? TraceKind::dirichlet : TraceKind::neumann});
  }
  return slots;
}

}  // namespace

void save_model(std::ostream& out, const LinearBoundaryOperator& op) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& m : op.layers()) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    }
    layers.push_back({{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}});
  }
  const nlohmann::json j = {
      {"format", "dtn-linear-operator"},
      {"version", 1},
      {"kernel", op.kernel()},
      {"layout",
       {{"n_points", op.layout().n_points},
        {"input", slots_to_json(op.layout().input)},
        {"output", slots_to_json(op.layout().output)}}},
      {"layers", layers},
  };
  out << j.dump() << '\n';
}

LinearBoundaryOperator load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
  try {
    if (j.at("format").get<std::string>() != "dtn-linear-operator") throw ParseError("not a model file", 0);
    OperatorLayout layout;
    layout.n_points = j.at("layout").at("n_points").get<std::size_t>();
    layout.input = slots_from_json(j.at("layout").at("input"));
    layout.output = slots_from_json(j.at("layout").at("output"));
    std::vector<Eigen::MatrixXd> layers;
    for (const auto& l : j.at("layers")) {
      const auto rows = l.at("rows").get<Eigen::Index>();
      const auto cols = l.at("cols").get<Eigen::Index>();
      const auto& data = l.at("data");
      if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw LayoutError("layer entry count does not match its shape");
      Eigen::MatrixXd m(rows, cols);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
      }
      layers.push_back(std::move(m));
    }
    return {j.at("kernel").get<KernelSpec>(), std::move(layout), std::move(layers)};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
}

}  // namespace dtn
