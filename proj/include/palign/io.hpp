#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "palign/digest.hpp"
#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/util.hpp"

namespace palign {

using json = nlohmann::json;

inline json to_json(const SocioDemographics& d) {
  return json{{"gender", to_string(d.gender)},
              {"age_band", to_string(d.age_band)},
              {"income_band", to_string(d.income_band)},
              {"user_group", to_string(d.user_group)}};
}

inline SocioDemographics demographics_from_json(const json& j) {
  return {gender_from_string(j.at("gender").get<std::string>()),
          age_band_from_string(j.at("age_band").get<std::string>()),
          income_band_from_string(j.at("income_band").get<std::string>()),
          user_group_from_string(j.at("user_group").get<std::string>())};
}

inline json to_json(const ModeAttributes& m) {
  return json{{"cost", m.cost}, {"travel_time", m.travel_time}, {"headway", m.headway}};
}

inline ModeAttributes mode_attributes_from_json(const json& j) {
  return {j.at("cost").get<double>(), j.at("travel_time").get<double>(),
          j.at("headway").get<double>()};
}

inline json to_json(const ChoiceContext& c) {
  return json{{"purpose", to_string(c.purpose)},
              {"first_class", c.first_class},
              {"who_pays", to_string(c.who_pays)},
              {"luggage", to_string(c.luggage)},
              {"annual_pass", c.annual_pass},
              {"train", to_json(c.train)},
              {"swissmetro", to_json(c.swissmetro)},
              {"car", to_json(c.car)}};
}

inline ChoiceContext context_from_json(const json& j) {
  ChoiceContext c;
  c.purpose = purpose_from_string(j.at("purpose").get<std::string>());
  c.first_class = j.at("first_class").get<bool>();
  c.who_pays = payer_from_string(j.at("who_pays").get<std::string>());
  c.luggage = luggage_from_string(j.at("luggage").get<std::string>());
  c.annual_pass = j.at("annual_pass").get<bool>();
  c.train = mode_attributes_from_json(j.at("train"));
  c.swissmetro = mode_attributes_from_json(j.at("swissmetro"));
  c.car = mode_attributes_from_json(j.at("car"));
  c.validate();
  return c;
}

inline json to_json(const ChoiceRecord& r) {
  return json{{"kind", "record"},
              {"respondent_id", r.respondent_id},
              {"demographics", to_json(r.demographics)},
              {"context", to_json(r.context)},
              {"chosen", to_string(r.chosen)}};
}

inline ChoiceRecord record_from_json(const json& j) {
  return {j.at("respondent_id").get<std::string>(),
          demographics_from_json(j.at("demographics")),
          context_from_json(j.at("context")),
          alternative_from_string(j.at("chosen").get<std::string>())};
}

inline json to_json(const RespondentPanel& p) {
  json obs = json::array();
  for (const auto& [ctx, chosen] : p.observations) {
    obs.push_back(json{{"context", to_json(ctx)}, {"chosen", to_string(chosen)}});
  }
  return json{{"kind", "panel"},
              {"respondent_id", p.respondent_id},
              {"demographics", to_json(p.demographics)},
              {"observations", obs}};
}

inline RespondentPanel panel_from_json(const json& j) {
  RespondentPanel p;
  p.respondent_id = j.at("respondent_id").get<std::string>();
  p.demographics = demographics_from_json(j.at("demographics"));
  for (const auto& o : j.at("observations")) {
    p.observations.emplace_back(context_from_json(o.at("context")),
                                alternative_from_string(o.at("chosen").get<std::string>()));
  }
  if (p.observations.empty()) throw DataError("panel has no observations");
  return p;
}

// ---------------------------------------------------------------------------
// JSONL files

inline void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::vector<json> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) +
                      ": invalid JSON record: " + e.what());
    }
  }
  return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

// ---------------------------------------------------------------------------
// Bundle persistence: one JSONL file per split plus a split manifest.

inline void save_panels(const std::filesystem::path& path,
                        const std::vector<RespondentPanel>& panels) {
  std::vector<json> rows;
  rows.reserve(panels.size());
  for (const auto& p : panels) rows.push_back(to_json(p));
  write_jsonl(path, rows);
}

inline std::vector<RespondentPanel> load_panels(const std::filesystem::path& path) {
  std::vector<RespondentPanel> panels;
  for (const auto& row : read_jsonl(path)) panels.push_back(panel_from_json(row));
  return panels;
}

inline void save_records(const std::filesystem::path& path,
                         const std::vector<ChoiceRecord>& records) {
  std::vector<json> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(to_json(r));
  write_jsonl(path, rows);
}

inline std::vector<ChoiceRecord> load_records(const std::filesystem::path& path) {
  std::vector<ChoiceRecord> records;
  for (const auto& row : read_jsonl(path)) records.push_back(record_from_json(row));
  return records;
}

inline void save_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle) {
  std::filesystem::create_directories(dir);
  save_panels(dir / "detailed.jsonl", bundle.detailed);
  save_records(dir / "general.jsonl", bundle.general);
  save_records(dir / "test.jsonl", bundle.test);
  write_file(dir / "split_seed.json",
             json{{"kind", "split_seed"}, {"seed", bundle.split_seed}}.dump() + "\n");
}

inline DatasetBundle load_bundle(const std::filesystem::path& dir) {
  DatasetBundle b;
  b.detailed = load_panels(dir / "detailed.jsonl");
  b.general = load_records(dir / "general.jsonl");
  b.test = load_records(dir / "test.jsonl");
  const auto seed_rows = read_jsonl(dir / "split_seed.json");
  if (!seed_rows.empty()) b.split_seed = seed_rows.front().at("seed").get<std::uint64_t>();
  return b;
}

}  // namespace palign
