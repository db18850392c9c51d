// JSON mapping for configuration, tumor specs and provenance records.

#pragma once

#include <filesystem>

#include <json.hpp>

#include "tumorsynth/config.hpp"

namespace tumorsynth {

void to_json(nlohmann::json& j, const Range& r);
void from_json(const nlohmann::json& j, Range& r);
void to_json(nlohmann::json& j, const SizePreset& p);
void from_json(const nlohmann::json& j, SizePreset& p);
void to_json(nlohmann::json& j, const GenConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, GenConfig& c);
void to_json(nlohmann::json& j, const TumorSpec& s);
void from_json(const nlohmann::json& j, TumorSpec& s);
void to_json(nlohmann::json& j, const SkippedTumor& s);
void from_json(const nlohmann::json& j, SkippedTumor& s);
void to_json(nlohmann::json& j, const ProvenanceRecord& p);
void from_json(const nlohmann::json& j, ProvenanceRecord& p);

GenConfig load_config(const std::filesystem::path& path);
void save_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);

}  // namespace tumorsynth
