#include "ppmp/portrait_io.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

using nlohmann::json;

json plane_to_json(const PlaneNormalization& plane) {
  return json{{"y_center", plane.y_center},
              {"y_scale", plane.y_scale},
              {"y_dot_scale", plane.y_dot_scale},
              {"direction", plane.direction}};
}

PlaneNormalization plane_from_json(const json& doc, const std::string& context) {
  PlaneNormalization p;
  p.y_center = io::require<double>(doc, "y_center", context);
  p.y_scale = io::require<double>(doc, "y_scale", context);
  p.y_dot_scale = io::require<double>(doc, "y_dot_scale", context);
  p.direction = doc.contains("direction") ? io::require<double>(doc, "direction", context) : 1.0;
  try {
    p.validate();
  } catch (const ConfigError& e) {
    throw ParseError(context + ": " + e.what());
  }
  return p;
}

json portrait_to_json(const PhasePortrait& portrait) {
  json steps = json::array();
  const auto phases = portrait.phase_index();
  for (std::size_t t = 0; t < portrait.size(); ++t) {
    const JointGaussian& g = portrait.steps()[t];
    json mean = json::array();
    for (Eigen::Index i = 0; i < g.mean.size(); ++i) mean.push_back(g.mean[i]);
    json cov = json::array();
    for (Eigen::Index r = 0; r < g.cov.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < g.cov.cols(); ++c) row.push_back(g.cov(r, c));
      cov.push_back(std::move(row));
    }
    steps.push_back(json{{"phase", phases[t]}, {"mean", std::move(mean)}, {"cov", std::move(cov)}});
  }
  return json{{"mode", std::string(to_string(portrait.mode()))},
              {"d_q", portrait.d_q()},
              {"d_x", portrait.d_x()},
              {"progress_dim", portrait.progress_dim()},
              {"plane_spec", plane_to_json(portrait.plane())},
              {"target_progress_dim", portrait.target_progress_dim()},
              {"target_plane", plane_to_json(portrait.target_plane())},
              {"steps", std::move(steps)}};
}

PhasePortrait portrait_from_json(const json& doc, const std::string& source) {
  if (!doc.is_object()) throw ParseError(source + ": expected a JSON object");
  PhaseMode mode;
  try {
    mode = phase_mode_from_string(io::require<std::string>(doc, "mode", source));
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ParseError(source + ".mode: " + e.what());
  }
  const int dq = io::require<int>(doc, "d_q", source);
  const int dx = io::require<int>(doc, "d_x", source);
  if (dq < 1 || dx < 1) throw ParseError(source + ": d_q and d_x must be positive");
  const int progress_dim = io::require<int>(doc, "progress_dim", source);
  const PlaneNormalization plane =
      plane_from_json(io::require<json>(doc, "plane_spec", source), source + ".plane_spec");
  const int target_progress_dim =
      doc.contains("target_progress_dim") ? io::require<int>(doc, "target_progress_dim", source) : 0;
  const PlaneNormalization target_plane =
      doc.contains("target_plane")
          ? plane_from_json(doc.at("target_plane"), source + ".target_plane")
          : PlaneNormalization{};

  const json steps_doc = io::require<json>(doc, "steps", source);
  if (!steps_doc.is_array()) throw ParseError(source + ".steps: expected an array");
  const int d = dq + dx;
  std::vector<double> phases;
  std::vector<JointGaussian> steps;
  for (std::size_t t = 0; t < steps_doc.size(); ++t) {
    const std::string ctx = source + ".steps[" + std::to_string(t) + "]";
    const json& s = steps_doc[t];
    phases.push_back(io::require<double>(s, "phase", ctx));
    const auto mean = io::require<std::vector<double>>(s, "mean", ctx);
    const auto cov = io::require<std::vector<std::vector<double>>>(s, "cov", ctx);
    if (static_cast<int>(mean.size()) != d) {
      throw ParseError(ctx + ".mean: expected " + std::to_string(d) + " entries");
    }
    if (static_cast<int>(cov.size()) != d) {
      throw ParseError(ctx + ".cov: expected " + std::to_string(d) + " rows");
    }
    JointGaussian g;
    g.d_q = dq;
    g.d_x = dx;
    g.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), d);
    g.cov.resize(d, d);
    for (int r = 0; r < d; ++r) {
      if (static_cast<int>(cov[static_cast<std::size_t>(r)].size()) != d) {
        throw ParseError(ctx + ".cov[" + std::to_string(r) + "]: expected " + std::to_string(d) +
                         " columns");
      }
      for (int c = 0; c < d; ++c) g.cov(r, c) = cov[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    steps.push_back(std::move(g));
  }

  try {
    return PhasePortrait(mode, progress_dim, plane, target_progress_dim, target_plane,
                         std::move(phases), std::move(steps));
  } catch (const Error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

void save_portrait(const PhasePortrait& portrait, const std::filesystem::path& path,
                   const json& manifest) {
  json doc = portrait_to_json(portrait);
  if (!manifest.is_null()) doc["manifest"] = manifest;
  io::write_json(path, doc);
}

PhasePortrait load_portrait(const std::filesystem::path& path) {
  return portrait_from_json(io::read_json(path), path.string());
}

void write_demo_csv(const std::filesystem::path& path, const Demonstration& demo, double dt) {
  std::ostringstream out;
  out << 't';
  for (Eigen::Index j = 0; j < demo.q.cols(); ++j) out << ",q" << j;
  for (Eigen::Index j = 0; j < demo.x.cols(); ++j) out << ",x" << j;
  out << '\n';
  for (Eigen::Index t = 0; t < demo.q.rows(); ++t) {
    out << io::format_double(static_cast<double>(t) * dt);
    for (Eigen::Index j = 0; j < demo.q.cols(); ++j) out << ',' << io::format_double(demo.q(t, j));
    for (Eigen::Index j = 0; j < demo.x.cols(); ++j) out << ',' << io::format_double(demo.x(t, j));
    out << '\n';
  }
  io::write_file(path, out.str());
}

LoadedDemo read_demo_csv(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::istringstream in(text);
  std::string line;
  const std::string src = path.string();
  if (!std::getline(in, line)) throw ParseError(src + ":1: empty demonstration file");
  const auto header = io::split_csv_line(line);
  if (header.empty() || header[0] != "t") throw ParseError(src + ":1: first column must be 't'");
  int dq = 0;
  int dx = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string& h = header[c];
    const std::string expect_q = "q" + std::to_string(dq);
    const std::string expect_x = "x" + std::to_string(dx);
    if (dx == 0 && h == expect_q) {
      ++dq;
    } else if (h == expect_x) {
      ++dx;
    } else {
      throw ParseError(src + ":1: unexpected column '" + h + "'");
    }
  }
  if (dq == 0 || dx == 0) throw ParseError(src + ":1: need at least one q and one x column");

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = io::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError(src + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = io::parse_double(cells[c], src + ":" + std::to_string(lineno) + ":" + header[c]);
      if (!std::isfinite(v)) {
        throw ParseError(src + ":" + std::to_string(lineno) + ":" + header[c] + ": non-finite value");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw ParseError(src + ": need at least two samples");

  LoadedDemo out;
  const auto T = static_cast<Eigen::Index>(rows.size());
  out.demo.q.resize(T, dq);
  out.demo.x.resize(T, dx);
  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& r = rows[static_cast<std::size_t>(t)];
    for (int j = 0; j < dq; ++j) out.demo.q(t, j) = r[static_cast<std::size_t>(1 + j)];
    for (int j = 0; j < dx; ++j) out.demo.x(t, j) = r[static_cast<std::size_t>(1 + dq + j)];
  }
  out.dt = (rows.back()[0] - rows.front()[0]) / static_cast<double>(rows.size() - 1);
  if (!(out.dt > 0.0)) throw ParseError(src + ": time column must increase");
  return out;
}

DemonstrationSet read_demo_set(const std::vector<std::filesystem::path>& paths) {
  DemonstrationSet set;
  for (const auto& p : paths) {
    LoadedDemo d = read_demo_csv(p);
    if (set.demos.empty()) {
      set.dt = d.dt;
    } else if (std::fabs(d.dt - set.dt) > 1e-9 * set.dt) {
      throw ConfigError(p.string() + ": sampling interval differs from the first demonstration");
    }
    set.demos.push_back(std::move(d.demo));
  }
  set.validate();
  return set;
}

}  // namespace ppmp
