#pragma once

// Stage helpers shared by the command-line front end and its tests.

#include <filesystem>
#include <string>
#include <vector>

#include "cellgraph/classifier.hpp"
#include "cellgraph/config.hpp"
#include "cellgraph/floorplan_json.hpp"
#include "cellgraph/graph.hpp"
#include "cellgraph/step_parser.hpp"

namespace cellgraph {

inline bool is_step_path(const std::string& path) {
  std::string ext = std::filesystem::path(path).extension().string();
  for (char& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".ifc" || ext == ".step" || ext == ".stp";
}

// Floor-plan JSON, or an IFC subset when the extension says STEP.
inline SpatialModel load_model(const std::string& path, std::vector<std::string>* warnings = nullptr) {
  const std::string text = read_file(path);
  if (!is_step_path(path)) return parse_floorplan(text, warnings);
  IfcParseResult r = parse_ifc_subset(text);
  if (warnings)
    for (const auto& w : r.warnings) warnings->push_back("line " + std::to_string(w.line) + ": " + w.message);
  return r.model;
}

inline std::string cells_to_csv(const std::vector<Cell>& cells) {
  std::string out = "cell_id,space_id,level_id,x,y\n";
  for (const Cell& c : cells)
    out += c.id + "," + c.space_id + "," + c.level_id + "," + format_number(c.center.x) + "," +
           format_number(c.center.y) + "\n";
  return out;
}

inline std::vector<std::string> cell_ids(const std::vector<Cell>& cells) {
  std::vector<std::string> ids;
  ids.reserve(cells.size());
  for (const Cell& c : cells) ids.push_back(c.id);
  return ids;
}

inline std::vector<LocatedVote> locate_votes(const SpatialModel& model, const std::vector<FeedbackVote>& votes) {
  std::vector<LocatedVote> out;
  out.reserve(votes.size());
  for (const auto& v : votes)
    out.push_back({v.user_id, v.timestamp, level_for_floor(model, v.floor), model.transform.to_local({v.lat, v.lon}),
                   {}});
  return out;
}

// Onboarding histograms when available, otherwise the users' own votes.
inline std::map<std::string, int> personalities_for(const std::vector<FeedbackRecord>& records,
                                                    const std::map<std::string, LabelHistogram>& onboarding,
                                                    std::size_t k, std::uint64_t seed) {
  const auto hist = onboarding.empty() ? label_histograms(records) : onboarding;
  if (hist.empty()) return {};
  return cluster_personalities(hist, std::min(k, hist.size()), seed);
}

struct LocatedFix {
  std::string user_id;
  double timestamp = 0.0;
  std::string cell_id;
  double distance = 0.0;
};

inline std::vector<LocatedFix> locate_fixes(const SpatialModel& model, const CellLocator& locator,
                                            const std::vector<LocationFix>& fixes, const StreamConfig& cfg = {}) {
  std::vector<LocatedFix> out;
  for (const auto& f : preprocess_stream(fixes, cfg)) {
    const KnnHit hit = snap_to_cell(f, model, locator);
    out.push_back({f.user_id, f.timestamp, hit.id, hit.distance});
  }
  return out;
}

inline std::string located_fixes_csv(const std::vector<LocatedFix>& fixes) {
  std::string out = "user_id,timestamp,cell_id,distance\n";
  for (const auto& f : fixes)
    out += f.user_id + "," + format_number(f.timestamp) + "," + f.cell_id + "," + format_number(f.distance) + "\n";
  return out;
}

}  // namespace cellgraph
