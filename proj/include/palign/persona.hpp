#pragma once

#include <array>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/io.hpp"
#include "palign/util.hpp"

namespace palign {

enum class Factor : int {
  TravelTime = 0,
  TravelCost,
  Flexibility,
  TravelHabit,
  Comfort,
  TripPurpose,
};

inline constexpr std::size_t kFactorCount = 6;

// Rendering order is fixed; prompts, parsers and files all use it.
inline constexpr std::array<std::string_view, kFactorCount> kFactorLabels = {
    "travel time", "travel cost", "flexibility",
    "travel habit", "comfort",    "trip purpose"};

inline constexpr std::array<std::string_view, kFactorCount> kFactorKeys = {
    "travel_time", "travel_cost", "flexibility",
    "travel_habit", "comfort",    "trip_purpose"};

struct Persona {
  std::string source_respondent_id;
  std::array<int, kFactorCount> ratings{};  // each in [1, 10]
  std::optional<std::string> summary_text;

  int rating(Factor f) const { return ratings[static_cast<std::size_t>(f)]; }

  void validate() const {
    for (std::size_t i = 0; i < kFactorCount; ++i) {
      if (ratings[i] < 1 || ratings[i] > 10) {
        throw DataError("persona rating out of range for " + std::string(kFactorKeys[i]) +
                        ": " + std::to_string(ratings[i]));
      }
    }
  }

  bool operator==(const Persona&) const = default;
};

struct BasisProvenance {
  std::string expert_identity;
  std::string prompt_version;
  std::string date;

  bool operator==(const BasisProvenance&) const = default;
};

struct PersonaBasis {
  std::vector<Persona> personas;
  std::map<std::string, SocioDemographics> demographics_index;
  BasisProvenance provenance;

  std::size_t size() const { return personas.size(); }

  const SocioDemographics& demographics_of(std::size_t index) const {
    const auto& id = personas.at(index).source_respondent_id;
    auto it = demographics_index.find(id);
    if (it == demographics_index.end()) {
      throw DataError("persona respondent id not in demographics index: " + id);
    }
    return it->second;
  }

  void validate() const {
    for (const auto& p : personas) {
      p.validate();
      if (!demographics_index.count(p.source_respondent_id)) {
        throw DataError("persona respondent id not in demographics index: " +
                        p.source_respondent_id);
      }
    }
  }

  bool operator==(const PersonaBasis&) const = default;
};

// Extracts the six labeled integer ratings from expert output. Out-of-range
// values are errors, not clamped; conflicting duplicate lines are errors.
inline Persona parse_persona(const std::string& text, const std::string& respondent_id) {
  if (trim(text).empty()) {
    throw OracleError(OracleError::Kind::ResponseFormat, "empty persona response", text);
  }
  std::array<std::optional<int>, kFactorCount> found;
  std::optional<std::string> summary;
  std::vector<std::string> problems;

  for (const auto& raw_line : split_lines(text)) {
    std::string line = trim(raw_line);
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) {
      line = trim(line.substr(1));
    }
    const std::string lower = to_lower(line);
    if (starts_with(lower, "summary:")) {
      const auto s = trim(line.substr(8));
      if (!s.empty()) summary = s;
      continue;
    }
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      const auto& label = kFactorLabels[f];
      if (!starts_with(lower, label)) continue;
      auto rest = trim(lower.substr(label.size()));
      if (rest.empty() || rest.front() != ':') continue;
      rest = trim(rest.substr(1));
      char* end = nullptr;
      const long value = std::strtol(rest.c_str(), &end, 10);
      if (end == rest.c_str() || trim(end).size() > 0) {
        problems.push_back(std::string(label) + ": unreadable rating '" + rest + "'");
        break;
      }
      if (value < 1 || value > 10) {
        problems.push_back(std::string(label) + ": rating " + std::to_string(value) +
                           " outside [1,10]");
        break;
      }
      if (found[f] && *found[f] != value) {
        problems.push_back(std::string(label) + ": conflicting ratings " +
                           std::to_string(*found[f]) + " vs " + std::to_string(value));
        break;
      }
      found[f] = static_cast<int>(value);
      break;
    }
  }

  for (std::size_t f = 0; f < kFactorCount; ++f) {
    if (!found[f]) problems.push_back(std::string(kFactorLabels[f]) + ": missing");
  }
  if (!problems.empty()) {
    std::string msg = "persona parse failed for respondent " + respondent_id + ":";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw OracleError(OracleError::Kind::ResponseFormat, msg, text);
  }

  Persona persona;
  persona.source_respondent_id = respondent_id;
  for (std::size_t f = 0; f < kFactorCount; ++f) persona.ratings[f] = *found[f];
  persona.summary_text = summary;
  persona.validate();
  return persona;
}

// ---------------------------------------------------------------------------
// Persistence (JSONL: one header row, then one row per persona)

inline json to_json(const Persona& p, const SocioDemographics& d) {
  json ratings;
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    ratings[std::string(kFactorKeys[f])] = p.ratings[f];
  }
  json row{{"kind", "persona"},
           {"respondent_id", p.source_respondent_id},
           {"ratings", ratings},
           {"demographics", to_json(d)}};
  if (p.summary_text) row["summary"] = *p.summary_text;
  return row;
}

inline void save_basis(const std::filesystem::path& path, const PersonaBasis& basis) {
  basis.validate();
  std::vector<json> rows;
  rows.push_back(json{{"kind", "persona_basis"},
                      {"expert", basis.provenance.expert_identity},
                      {"prompt_version", basis.provenance.prompt_version},
                      {"date", basis.provenance.date},
                      {"count", basis.personas.size()}});
  for (const auto& p : basis.personas) {
    rows.push_back(to_json(p, basis.demographics_index.at(p.source_respondent_id)));
  }
  write_jsonl(path, rows);
}

inline PersonaBasis load_basis(const std::filesystem::path& path) {
  PersonaBasis basis;
  for (const auto& row : read_jsonl(path)) {
    const auto kind = row.at("kind").get<std::string>();
    if (kind == "persona_basis") {
      basis.provenance.expert_identity = row.at("expert").get<std::string>();
      basis.provenance.prompt_version = row.at("prompt_version").get<std::string>();
      basis.provenance.date = row.at("date").get<std::string>();
      continue;
    }
    if (kind != "persona") throw DataError("unexpected row kind in persona file: " + kind);
    Persona p;
    p.source_respondent_id = row.at("respondent_id").get<std::string>();
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      p.ratings[f] = row.at("ratings").at(std::string(kFactorKeys[f])).get<int>();
    }
    if (row.contains("summary")) p.summary_text = row.at("summary").get<std::string>();
    basis.demographics_index[p.source_respondent_id] =
        demographics_from_json(row.at("demographics"));
    basis.personas.push_back(std::move(p));
  }
  basis.validate();
  return basis;
}

inline std::string basis_digest(const PersonaBasis& basis) {
  Sha256 h;
  for (const auto& p : basis.personas) {
    h.update(to_json(p, basis.demographics_index.at(p.source_respondent_id)).dump());
  }
  return to_hex(h.finish());
}

}  // namespace palign
