#include "dtn/synthesis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <thread>

#include "dtn/bessel.hpp"
#include "dtn/error.hpp"
#include "dtn/serialization.hpp"

namespace dtn {

namespace {

constexpr std::size_t kMaxRejections = 1'000'000;

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

TracePair draw_sample(const DatasetSpec& spec, const BoundaryGrid& grid, Rng& rng) {
  const std::size_t n = spec.n_kernels_per_sample;
  for (;;) {
    const auto sources = sample_source_points(spec, rng, n);
    const auto weights = sample_simplex_weights(n, rng);
    std::vector<SourcePart> parts(n, SourcePart::real);
    if (spec.kernel.is_helmholtz()) {
      for (auto& p : parts) p = rng.coin() ? SourcePart::imaginary : SourcePart::real;
    }
    const TracePair raw = synthesize_trace_pair(spec.kernel, spec.domain, grid, sources, weights, parts);
    if (max_abs(raw.h) == 0.0) continue;  // degenerate: redraw
    return normalize_pair(raw, default_normalization(spec.kernel));
  }
}

}  // namespace

NormalizationMode default_normalization(const KernelSpec& kernel) {
  return kernel.is_helmholtz() ? NormalizationMode::scale_only : NormalizationMode::laplace_mode;
}

std::string to_string(NormalizationMode mode) {
  return mode == NormalizationMode::laplace_mode ? "laplace_mode" : "scale_only";
}

NormalizationMode normalization_from_string(const std::string& s) {
  if (s == "laplace_mode") return NormalizationMode::laplace_mode;
  if (s == "scale_only") return NormalizationMode::scale_only;
  throw ConfigError("unknown normalization '" + s + "'");
}

void DatasetSpec::adapt_box_to_domain() {
  if (domain.dimension() == 3 && source_box.lo.z == source_box.hi.z) {
    source_box.lo.z = source_box.lo.x;
    source_box.hi.z = source_box.hi.x;
  }
}

void validate(const DatasetSpec& spec) {
  validate(spec.kernel);
  validate(spec.domain);
  if (spec.kernel.dimension() != spec.domain.dimension()) {
    throw ConfigError("kernel and domain dimensions differ");
  }
  if (spec.n_samples == 0 || spec.n_kernels_per_sample == 0) {
    throw ConfigError("sample and kernel counts must be positive");
  }
  if (!(spec.min_boundary_distance > 0.0)) throw ConfigError("min_boundary_distance must be positive");
  if (!spec.source_box.strictly_contains(bounding_box(spec.domain))) {
    throw ConfigError("source box must strictly contain the domain");
  }
}

double basis_value(const KernelSpec& kernel, SourcePart part, const Vec3& source, const Vec3& p) {
  const Vec3 d = p - source;
  switch (kernel.family) {
    case KernelFamily::laplace2d:
      return std::log(d.x * d.x + d.y * d.y);
    case KernelFamily::helmholtz2d: {
      const double kr = kernel.k * std::hypot(d.x, d.y);
      return part == SourcePart::real ? bessel_j0(kr) : bessel_y0(kr);
    }
    case KernelFamily::helmholtz3d: {
      const double r = norm(d);
      const double kr = kernel.k * r;
      return (part == SourcePart::real ? std::cos(kr) : std::sin(kr)) / (4.0 * std::numbers::pi * r);
    }
  }
  return 0.0;
}

Vec3 basis_gradient(const KernelSpec& kernel, SourcePart part, const Vec3& source, const Vec3& p) {
  Vec3 d = p - source;
  switch (kernel.family) {
    case KernelFamily::laplace2d: {
      d.z = 0.0;
      return (2.0 / (d.x * d.x + d.y * d.y)) * d;
    }
    case KernelFamily::helmholtz2d: {
      d.z = 0.0;
      const double r = std::hypot(d.x, d.y);
      const double kr = kernel.k * r;
      // ∂/∂x J0(kr) = -k (x/r) J1(kr); likewise for Y0 with Y1
      const double first = part == SourcePart::real ? bessel_j1(kr) : bessel_y1(kr);
      return (-kernel.k * first / r) * d;
    }
    case KernelFamily::helmholtz3d: {
      const double r = norm(d);
      const double kr = kernel.k * r;
      const double c = std::cos(kr);
      const double s = std::sin(kr);
      // d/dr [cos(kr)/r] = -(k r sin + cos)/r², d/dr [sin(kr)/r] = (k r cos - sin)/r²
      const double radial = part == SourcePart::real ? -(kr * s + c) : (kr * c - s);
      return (radial / (4.0 * std::numbers::pi * r * r * r)) * d;
    }
  }
  return {};
}

std::vector<Vec3> sample_source_points(const DatasetSpec& spec, Rng& rng, std::size_t n) {
  if (!spec.source_box.strictly_contains(bounding_box(spec.domain))) {
    throw ConfigError("source box must strictly contain the domain");
  }
  const bool three_d = spec.domain.dimension() == 3;
  std::vector<Vec3> out;
  out.reserve(n);
  while (out.size() < n) {
    std::size_t rejected = 0;
    for (;;) {
      Vec3 p{rng.uniform(spec.source_box.lo.x, spec.source_box.hi.x),
             rng.uniform(spec.source_box.lo.y, spec.source_box.hi.y), 0.0};
      if (three_d) p.z = rng.uniform(spec.source_box.lo.z, spec.source_box.hi.z);
      if (!contains(spec.domain, p) &&
          distance_to_boundary(spec.domain, p) >= spec.min_boundary_distance) {
        out.push_back(p);
        break;
      }
      if (++rejected > kMaxRejections) {
        throw ConfigError("source sampling rejected too many points; the source box is too small");
      }
    }
  }
  return out;
}

std::vector<double> sample_simplex_weights(std::size_t n, Rng& rng) {
  return simplex_weights(n, [&rng] { return rng.unit(); });
}

TracePair synthesize_trace_pair(const KernelSpec& kernel, const DomainSpec& domain,
                                const BoundaryGrid& grid, std::span<const Vec3> sources,
                                std::span<const double> weights, std::span<const SourcePart> parts) {
  if (sources.size() != weights.size() || sources.size() != parts.size()) {
    throw DimensionError("sources, weights and parts must have equal length");
  }
  for (const auto& s : sources) {
    if (contains(domain, s)) throw ConfigError("source point lies inside the domain");
  }
  TracePair pair;
  pair.g.assign(grid.size(), 0.0);
  pair.h.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (std::size_t p = 0; p < grid.size(); ++p) {
      pair.g[p] += weights[i] * basis_value(kernel, parts[i], sources[i], grid.points[p]);
      pair.h[p] += weights[i] * dot(basis_gradient(kernel, parts[i], sources[i], grid.points[p]), grid.normals[p]);
    }
  }
  return pair;
}

TracePair normalize_pair(const TracePair& pair, NormalizationMode mode, std::size_t reference) {
  const double s = max_abs(pair.h);
  if (!(s > 0.0)) throw DegenerateSampleError("Neumann trace is identically zero");
  if (reference >= pair.g.size()) throw DimensionError("normalization reference out of range");
  TracePair out;
  out.norm.scale = s;
  out.norm.subtracted_constant = mode == NormalizationMode::laplace_mode ? pair.g[reference] : 0.0;
  out.g.resize(pair.g.size());
  out.h.resize(pair.h.size());
  for (std::size_t i = 0; i < pair.g.size(); ++i) out.g[i] = (pair.g[i] - out.norm.subtracted_constant) / s;
  for (std::size_t i = 0; i < pair.h.size(); ++i) out.h[i] = pair.h[i] / s;
  return out;
}

TracePair denormalize_pair(const TracePair& pair) {
  TracePair out;
  out.g.resize(pair.g.size());
  out.h.resize(pair.h.size());
  for (std::size_t i = 0; i < pair.g.size(); ++i) {
    out.g[i] = pair.g[i] * pair.norm.scale + pair.norm.subtracted_constant;
  }
  for (std::size_t i = 0; i < pair.h.size(); ++i) out.h[i] = pair.h[i] * pair.norm.scale;
  return out;
}

Dataset build_dataset(const DatasetSpec& spec, unsigned threads) {
  validate(spec);
  Dataset data;
  data.spec = spec;
  data.grid = make_boundary_grid(spec.domain, spec.n_points);
  data.pairs.resize(spec.n_samples);

  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng = Rng::stream(spec.seed, i);
      data.pairs[i] = draw_sample(spec, data.grid, rng);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    work(0, spec.n_samples);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (spec.n_samples + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(spec.n_samples, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << "kind,n_points\n";
  for (const auto& p : data.pairs) {
    out << 'g';
    for (double v : p.g) out << ',' << format_double(v);
    out << "\nh";
    for (double v : p.h) out << ',' << format_double(v);
    out << '\n';
  }
}

std::uint64_t dataset_checksum(const Dataset& data) {
  std::ostringstream ss;
  write_dataset_csv(ss, data);
  return fnv1a(ss.str());
}

void save_dataset(const Dataset& data, const std::filesystem::path& stem) {
  std::ostringstream csv;
  write_dataset_csv(csv, data);
  const std::string bytes = csv.str();
  {
    std::ofstream f(stem.string() + ".csv", std::ios::binary);
    if (!f) throw ConfigError("cannot write " + stem.string() + ".csv");
    f << bytes;
  }
  nlohmann::json records = nlohmann::json::array();
  for (const auto& p : data.pairs) records.push_back({p.norm.subtracted_constant, p.norm.scale});
  nlohmann::json j = {
      {"format", "dtn-dataset"},
      {"version", 1},
      {"kernel", data.spec.kernel},
      {"domain", data.spec.domain},
      {"n_points", data.spec.n_points},
      {"n_samples", data.spec.n_samples},
      {"n_kernels_per_sample", data.spec.n_kernels_per_sample},
      {"source_box", data.spec.source_box},
      {"min_boundary_distance", data.spec.min_boundary_distance},
      {"seed", data.spec.seed},
      {"normalization", to_string(data.normalization())},
      {"checksum", hex64(fnv1a(bytes))},
      {"norm_records", records},
  };
  std::ofstream f(stem.string() + ".json");
  if (!f) throw ConfigError("cannot write " + stem.string() + ".json");
  f << j.dump(2) << '\n';
}

Dataset load_dataset(const std::filesystem::path& stem) {
  std::ifstream meta(stem.string() + ".json");
  if (!meta) throw ConfigError("cannot read " + stem.string() + ".json");
  nlohmann::json j;
  try {
    meta >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dataset sidecar: ") + e.what(), 0);
  }
  Dataset data;
  data.spec.kernel = j.at("kernel").get<KernelSpec>();
  data.spec.domain = j.at("domain").get<DomainSpec>();
  data.spec.n_points = j.at("n_points").get<std::size_t>();
  data.spec.n_samples = j.at("n_samples").get<std::size_t>();
  data.spec.n_kernels_per_sample = j.at("n_kernels_per_sample").get<std::size_t>();
  data.spec.source_box = j.at("source_box").get<Box>();
  data.spec.min_boundary_distance = j.at("min_boundary_distance").get<double>();
  data.spec.seed = j.at("seed").get<std::uint64_t>();
  data.grid = make_boundary_grid(data.spec.domain, data.spec.n_points);

  std::ifstream csv(stem.string() + ".csv", std::ios::binary);
  if (!csv) throw ConfigError("cannot read " + stem.string() + ".csv");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(csv, line) || line != "kind,n_points") throw ParseError("missing 'kind,n_points' header", 1);
  const auto& records = j.at("norm_records");
  auto parse_row = [&](char kind, std::vector<double>& out) {
    ++line_no;
    if (!std::getline(csv, line)) throw ParseError("unexpected end of dataset", line_no);
    if (line.size() < 2 || line[0] != kind || line[1] != ',') {
      throw ParseError(std::string("expected a '") + kind + "' row", line_no);
    }
    out.clear();
    out.reserve(data.spec.n_points);
    const char* p = line.data() + 2;
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc{}) throw ParseError("non-numeric value in dataset", line_no);
      out.push_back(v);
      p = next;
      if (p < end && *p == ',') ++p;
    }
    if (out.size() != data.spec.n_points) throw ParseError("row length differs from n_points", line_no);
  };
  data.pairs.resize(data.spec.n_samples);
  for (std::size_t i = 0; i < data.spec.n_samples; ++i) {
    parse_row('g', data.pairs[i].g);
    parse_row('h', data.pairs[i].h);
    data.pairs[i].norm = {records.at(i).at(0).get<double>(), records.at(i).at(1).get<double>()};
  }
  return data;
}

}  // namespace dtn
