#include "dtn/serialization.hpp"

#include <array>
#include <charconv>
#include <cstdio>

#include "dtn/error.hpp"

namespace dtn {

void to_json(nlohmann::json& j, const Vec3& v) { j = {v.x, v.y, v.z}; }

void from_json(const nlohmann::json& j, Vec3& v) {
  if (!j.is_array() || j.size() < 2 || j.size() > 3) throw ConfigError("point must be [x, y] or [x, y, z]");
  v.x = j.at(0).get<double>();
  v.y = j.at(1).get<double>();
  v.z = j.size() == 3 ? j.at(2).get<double>() : 0.0;
}

void to_json(nlohmann::json& j, const Box& b) { j = {{"lo", b.lo}, {"hi", b.hi}}; }

void from_json(const nlohmann::json& j, Box& b) {
  b.lo = j.at("lo").get<Vec3>();
  b.hi = j.at("hi").get<Vec3>();
}

void to_json(nlohmann::json& j, const PolarCurve& c) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : c.terms) terms.push_back({t.harmonic, t.cos_coeff, t.sin_coeff});
  j = {{"center", c.center}, {"base_radius", c.base_radius}, {"terms", terms}};
}

void from_json(const nlohmann::json& j, PolarCurve& c) {
  c.center = j.value("center", nlohmann::json::array({0.0, 0.0})).get<Vec3>();
  c.base_radius = j.at("base_radius").get<double>();
  c.terms.clear();
  for (const auto& t : j.value("terms", nlohmann::json::array())) {
    c.terms.push_back({t.at(0).get<int>(), t.at(1).get<double>(), t.at(2).get<double>()});
  }
}

void to_json(nlohmann::json& j, const DomainSpec& d) {
  switch (d.shape) {
    case Shape::unit_square:
      j = {{"shape", "unit_square"}};
      return;
    case Shape::polar_curve:
      j = {{"shape", "polar_curve"}, {"outer", d.outer}};
      return;
    case Shape::multi_loop:
      j = {{"shape", "multi_loop"}, {"outer", d.outer}, {"inner", d.inner}};
      return;
    case Shape::sphere3d:
      j = {{"shape", "sphere3d"}, {"center", d.center}, {"radius", d.radius}};
      return;
  }
}

void from_json(const nlohmann::json& j, DomainSpec& d) {
  const auto shape = j.at("shape").get<std::string>();
  if (shape == "unit_square") {
    d = DomainSpec::unit_square();
  } else if (shape == "polar_curve") {
    d = DomainSpec::polar(j.at("outer").get<PolarCurve>());
  } else if (shape == "multi_loop") {
    d = DomainSpec::annulus(j.at("outer").get<PolarCurve>(), j.at("inner").get<PolarCurve>());
  } else if (shape == "sphere3d") {
    d = DomainSpec::sphere(j.at("center").get<Vec3>(), j.at("radius").get<double>());
  } else {
    throw ConfigError("unknown domain shape '" + shape + "'");
  }
}

void to_json(nlohmann::json& j, const KernelSpec& k) {
  j = {{"family", to_string(k.family)}, {"k", k.k}};
}

void from_json(const nlohmann::json& j, KernelSpec& k) {
  k.family = kernel_family_from_string(j.at("family").get<std::string>());
  k.k = j.value("k", 0.0);
}

DomainSpec domain_preset(const std::string& name) {
  if (name == "square" || name == "unit_square") return DomainSpec::unit_square();
  if (name == "disk") return DomainSpec::polar(PolarCurve{{0, 0, 0}, 1.0, {}});
  if (name == "flower") return DomainSpec::polar(PolarCurve{{0, 0, 0}, 0.65, {{5, 0.0, 0.2}}});
  if (name == "peanut") return DomainSpec::polar(PolarCurve{{0, 0, 0}, 0.7, {{2, 0.0, 0.35}}});
  if (name == "annulus") {
    return DomainSpec::annulus(PolarCurve{{0, 0, 0}, 1.0, {}}, PolarCurve{{0, 0, 0}, 0.4, {}});
  }
  if (name == "sphere") return DomainSpec::sphere({0, 0, 0}, 1.0);
  throw ConfigError("unknown domain preset '" + name + "'");
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace dtn
