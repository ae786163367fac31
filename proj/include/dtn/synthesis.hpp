#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dtn/geometry.hpp"
#include "dtn/kernels.hpp"
#include "dtn/random.hpp"

namespace dtn {

enum class NormalizationMode {
  /// subtract g[ref] from g, then divide g and h by max|h|
  laplace_mode,
  /// divide g and h by max|h| only
  scale_only,
};

NormalizationMode default_normalization(const KernelSpec& kernel);
std::string to_string(NormalizationMode mode);
NormalizationMode normalization_from_string(const std::string& s);

struct NormRecord {
  double subtracted_constant = 0.0;
  double scale = 1.0;
};

/// Dirichlet trace g and Neumann trace h on a boundary grid.
struct TracePair {
  std::vector<double> g;
  std::vector<double> h;
  NormRecord norm;
};

/// Part of the complex fundamental solution used as a real basis function.
/// Helmholtz 2D: real → J0(kr), imaginary → Y0(kr). Helmholtz 3D: real →
/// cos(kr)/(4πr), imaginary → sin(kr)/(4πr). Laplace: ln r² (real only).
enum class SourcePart { real, imaginary };

struct DatasetSpec {
  KernelSpec kernel;
  DomainSpec domain;
  std::size_t n_points = 400;
  std::size_t n_samples = 10000;
  std::size_t n_kernels_per_sample = 3;
  Box source_box{{-7.0, -7.0, 0.0}, {7.0, 7.0, 0.0}};
  double min_boundary_distance = 1e-3;
  std::uint64_t seed = 0;

  /// Applies the 3D default box [-7,7]³ when the domain is a sphere and the
  /// box is still planar.
  void adapt_box_to_domain();
};

/// Throws ConfigError on an invalid spec (box not strictly containing the
/// domain, non-positive distance, zero counts).
void validate(const DatasetSpec& spec);

/// Value of one basis function centred at `source`, evaluated at p.
double basis_value(const KernelSpec& kernel, SourcePart part, const Vec3& source, const Vec3& p);
/// Gradient of basis_value with respect to p.
Vec3 basis_gradient(const KernelSpec& kernel, SourcePart part, const Vec3& source, const Vec3& p);

/// Uniform draws from the source box, rejecting points inside the domain or
/// closer than min_boundary_distance to its boundary.
std::vector<Vec3> sample_source_points(const DatasetSpec& spec, Rng& rng, std::size_t n);

/// Sequential stick-breaking on the simplex: c1 ~ U[0,1], c_i ~ U[0, 1 - Σ_{j<i} c_j],
/// last weight closes the sum to 1. `unit_draw` returns values in [0, 1).
template <class UnitDraw>
std::vector<double> simplex_weights(std::size_t n, UnitDraw&& unit_draw) {
  std::vector<double> c(n, 0.0);
  double used = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    c[i] = (1.0 - used) * unit_draw();
    used += c[i];
  }
  if (n > 0) c[n - 1] = 1.0 - used;
  return c;
}

std::vector<double> sample_simplex_weights(std::size_t n, Rng& rng);

/// Raw (unnormalized) traces of u = Σ c_i f_i on the grid.
TracePair synthesize_trace_pair(const KernelSpec& kernel, const DomainSpec& domain,
                                const BoundaryGrid& grid, std::span<const Vec3> sources,
                                std::span<const double> weights, std::span<const SourcePart> parts);

/// Throws DegenerateSampleError when h is identically zero.
TracePair normalize_pair(const TracePair& pair, NormalizationMode mode, std::size_t reference = 0);
TracePair denormalize_pair(const TracePair& pair);

struct Dataset {
  DatasetSpec spec;
  BoundaryGrid grid;
  std::vector<TracePair> pairs;  // normalized

  NormalizationMode normalization() const { return default_normalization(spec.kernel); }
};

/// Generate n_samples normalized pairs. Sample i draws from Rng::stream(seed, i),
/// so the result does not depend on `threads`.
Dataset build_dataset(const DatasetSpec& spec, unsigned threads = 1);

/// Writes `<stem>.csv` (header `kind,n_points`, then alternating `g,...` and
/// `h,...` rows) and `<stem>.json` (spec echo, normalization records, checksum).
void save_dataset(const Dataset& data, const std::filesystem::path& stem);
Dataset load_dataset(const std::filesystem::path& stem);

/// FNV-1a over the CSV bytes; stable across runs for identical datasets.
std::uint64_t dataset_checksum(const Dataset& data);
void write_dataset_csv(std::ostream& out, const Dataset& data);

}  // namespace dtn
