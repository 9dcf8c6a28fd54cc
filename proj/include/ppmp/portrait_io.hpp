#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "ppmp/portrait.hpp"

namespace ppmp {

// Portrait document:
//   {mode, d_q, d_x, progress_dim, plane_spec, target_progress_dim, target_plane,
//    steps: [{phase, mean: [...], cov: [[...], ...]}, ...], manifest?}
nlohmann::json portrait_to_json(const PhasePortrait& portrait);
PhasePortrait portrait_from_json(const nlohmann::json& doc, const std::string& source = "portrait");

void save_portrait(const PhasePortrait& portrait, const std::filesystem::path& path,
                   const nlohmann::json& manifest = nullptr);
PhasePortrait load_portrait(const std::filesystem::path& path);

// Demonstration CSV, header `t,q0..q{d_q-1},x0..x{d_x-1}`, one demonstration per file.
void write_demo_csv(const std::filesystem::path& path, const Demonstration& demo, double dt);

struct LoadedDemo {
  Demonstration demo;
  double dt = 0.0;
};
LoadedDemo read_demo_csv(const std::filesystem::path& path);

// Reads several files into one set; all must share T, dt and dimensions.
DemonstrationSet read_demo_set(const std::vector<std::filesystem::path>& paths);

nlohmann::json plane_to_json(const PlaneNormalization& plane);
PlaneNormalization plane_from_json(const nlohmann::json& doc, const std::string& context);

}  // namespace ppmp
