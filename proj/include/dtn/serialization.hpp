#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dtn/geometry.hpp"
#include "dtn/kernels.hpp"

namespace dtn {

void to_json(nlohmann::json& j, const Vec3& v);
void from_json(const nlohmann::json& j, Vec3& v);
void to_json(nlohmann::json& j, const Box& b);
void from_json(const nlohmann::json& j, Box& b);
void to_json(nlohmann::json& j, const PolarCurve& c);
void from_json(const nlohmann::json& j, PolarCurve& c);
void to_json(nlohmann::json& j, const DomainSpec& d);
void from_json(const nlohmann::json& j, DomainSpec& d);
void to_json(nlohmann::json& j, const KernelSpec& k);
void from_json(const nlohmann::json& j, KernelSpec& k);

/// Named domains: square, disk, flower (0.65 + 0.2 sin 5θ),
/// peanut (0.7 + 0.35 sin 2θ), annulus, sphere.
DomainSpec domain_preset(const std::string& name);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace dtn
