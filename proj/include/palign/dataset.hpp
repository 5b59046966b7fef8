#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/util.hpp"

namespace palign {

// One line of the Swissmetro survey file, with only the columns this
// experiment uses.
struct SwissmetroRow {
  long line_number = 0;
  long group = 0, survey = 0, id = 0;
  long purpose = 0, first = 0, who = 0, luggage = 0, age = 0, male = 0,
       income = 0, ga = 0;
  long train_av = 0, car_av = 0, sm_av = 0;
  double train_tt = 0, train_co = 0, train_he = 0;
  double sm_tt = 0, sm_co = 0, sm_he = 0;
  double car_tt = 0, car_co = 0;
  long choice = 0;
};

namespace detail {

inline constexpr std::array<std::string_view, 23> kRequiredColumns = {
    "GROUP",    "SURVEY",  "ID",       "PURPOSE", "FIRST",  "WHO",
    "LUGGAGE",  "AGE",     "MALE",     "INCOME",  "GA",     "TRAIN_AV",
    "CAR_AV",   "SM_AV",   "TRAIN_TT", "TRAIN_CO", "TRAIN_HE", "SM_TT",
    "SM_CO",    "SM_HE",   "CAR_TT",   "CAR_CO",  "CHOICE"};

inline double parse_cell(const std::string& cell, std::string_view column,
                         long line_number) {
  const std::string t = trim(cell);
  if (t.empty()) {
    throw DataError("line " + std::to_string(line_number) + ": empty value in column " +
                    std::string(column));
  }
  std::size_t consumed = 0;
  double value = 0;
  try {
    value = std::stod(t, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != t.size()) {
    throw DataError("line " + std::to_string(line_number) + ": malformed numeric value '" +
                    t + "' in column " + std::string(column));
  }
  return value;
}

}  // namespace detail

// Parses the Swissmetro `.dat`-style delimited file (tab or comma separated,
// auto-detected from the header line).
inline std::vector<SwissmetroRow> parse_swissmetro(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset file: " + path.string());

  std::string header;
  if (!std::getline(in, header)) throw DataError("empty dataset file: " + path.string());
  if (!header.empty() && header.back() == '\r') header.pop_back();

  const char sep = header.find('\t') != std::string::npos ? '\t' : ',';
  const auto columns = split(header, sep);
  std::map<std::string, std::size_t, std::less<>> index;
  for (std::size_t i = 0; i < columns.size(); ++i) index[trim(columns[i])] = i;

  for (auto col : detail::kRequiredColumns) {
    if (!index.count(col)) {
      throw DataError("dataset schema error: missing required column " + std::string(col));
    }
  }

  std::vector<SwissmetroRow> rows;
  std::string line;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line, sep);
    if (cells.size() < columns.size()) {
      throw DataError("line " + std::to_string(lineno) + ": expected " +
                      std::to_string(columns.size()) + " fields, got " +
                      std::to_string(cells.size()));
    }
    auto num = [&](std::string_view col) {
      return detail::parse_cell(cells[index.find(col)->second], col, lineno);
    };
    auto integer = [&](std::string_view col) { return static_cast<long>(num(col)); };

    SwissmetroRow r;
    r.line_number = lineno;
    r.group = integer("GROUP");
    r.survey = integer("SURVEY");
    r.id = integer("ID");
    r.purpose = integer("PURPOSE");
    r.first = integer("FIRST");
    r.who = integer("WHO");
    r.luggage = integer("LUGGAGE");
    r.age = integer("AGE");
    r.male = integer("MALE");
    r.income = integer("INCOME");
    r.ga = integer("GA");
    r.train_av = integer("TRAIN_AV");
    r.car_av = integer("CAR_AV");
    r.sm_av = integer("SM_AV");
    r.train_tt = num("TRAIN_TT");
    r.train_co = num("TRAIN_CO");
    r.train_he = num("TRAIN_HE");
    r.sm_tt = num("SM_TT");
    r.sm_co = num("SM_CO");
    r.sm_he = num("SM_HE");
    r.car_tt = num("CAR_TT");
    r.car_co = num("CAR_CO");
    r.choice = integer("CHOICE");
    rows.push_back(r);
  }
  return rows;
}

// A row passes when all three modes are offered and every used variable is
// inside its banded domain; anything else counts as unknown.
inline bool row_passes_filter(const SwissmetroRow& r) {
  if (r.train_av != 1 || r.sm_av != 1 || r.car_av != 1) return false;
  if (r.choice < 1 || r.choice > 3) return false;
  if (r.age < 1 || r.age > 5) return false;
  if (r.income < 1 || r.income > 3) return false;
  if (r.male != 0 && r.male != 1) return false;
  if (r.group != 2 && r.group != 3) return false;
  if (r.purpose < 1 || r.purpose > 8) return false;
  if (r.who < 1 || r.who > 3) return false;
  if (r.luggage != 0 && r.luggage != 1 && r.luggage != 3) return false;
  if (r.first != 0 && r.first != 1) return false;
  if (r.ga != 0 && r.ga != 1) return false;
  for (double v : {r.train_tt, r.train_co, r.train_he, r.sm_tt, r.sm_co, r.sm_he,
                   r.car_tt, r.car_co}) {
    if (!std::isfinite(v) || v < 0) return false;
  }
  return true;
}

inline std::string filter_rule_description() {
  return "respondent-level exclusion: a respondent is dropped when any of their "
         "rows lacks one of the three alternatives or carries a value outside "
         "the banded domain of a used variable (AGE 1-5, INCOME 1-3, MALE 0/1, "
         "GROUP 2/3, PURPOSE 1-8, WHO 1-3, LUGGAGE 0/1/3, FIRST 0/1, GA 0/1, "
         "CHOICE 1-3)";
}

namespace detail {

inline SocioDemographics demographics_from_row(const SwissmetroRow& r) {
  SocioDemographics d;
  d.gender = r.male == 1 ? Gender::Male : Gender::Female;
  d.age_band = static_cast<AgeBand>(r.age - 1);
  d.income_band = static_cast<IncomeBand>(r.income - 1);
  d.user_group = r.group == 2 ? UserGroup::TrainUser : UserGroup::CarUser;
  return d;
}

inline ChoiceContext context_from_row(const SwissmetroRow& r) {
  ChoiceContext c;
  c.purpose = static_cast<Purpose>(r.purpose - 1);
  c.first_class = r.first == 1;
  c.who_pays = static_cast<Payer>(r.who - 1);
  c.luggage = r.luggage == 0 ? Luggage::None
              : r.luggage == 1 ? Luggage::One
                               : Luggage::Several;
  c.annual_pass = r.ga == 1;
  c.train = {r.train_co, r.train_tt, r.train_he};
  c.swissmetro = {r.sm_co, r.sm_tt, r.sm_he};
  c.car = {r.car_co, r.car_tt, 0.0};
  return c;
}

}  // namespace detail

// Groups surviving rows into per-respondent panels (file order preserved).
inline std::vector<RespondentPanel> filter_records(const std::vector<SwissmetroRow>& rows) {
  std::map<long, bool> respondent_ok;
  for (const auto& r : rows) {
    auto [it, inserted] = respondent_ok.try_emplace(r.id, true);
    it->second = it->second && row_passes_filter(r);
  }

  std::vector<RespondentPanel> panels;
  std::map<long, std::size_t> panel_index;
  for (const auto& r : rows) {
    if (!respondent_ok.at(r.id)) continue;
    auto it = panel_index.find(r.id);
    if (it == panel_index.end()) {
      it = panel_index.emplace(r.id, panels.size()).first;
      RespondentPanel p;
      p.respondent_id = std::to_string(r.id);
      p.demographics = detail::demographics_from_row(r);
      panels.push_back(std::move(p));
    }
    panels[it->second].observations.emplace_back(detail::context_from_row(r),
                                                 static_cast<Alternative>(r.choice - 1));
  }
  return panels;
}

struct SplitSizes {
  std::size_t n_detailed_respondents = 250;
  std::size_t n_general_records = 200;
  std::size_t n_test_records = 400;
};

// Deterministic split of panels into D_h (whole panels), D_l and D_t
// (individual records from the remaining respondents, disjoint).
inline DatasetBundle split_datasets(const std::vector<RespondentPanel>& panels,
                                    std::uint64_t seed, const SplitSizes& sizes = {}) {
  if (panels.size() < sizes.n_detailed_respondents) {
    throw DataError("not enough respondents: requested " +
                    std::to_string(sizes.n_detailed_respondents) + " detailed panels, have " +
                    std::to_string(panels.size()) + " (short by " +
                    std::to_string(sizes.n_detailed_respondents - panels.size()) + ")");
  }

  std::vector<std::size_t> order(panels.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng panel_rng(derive_seed(seed, 1));
  panel_rng.shuffle(order);

  DatasetBundle bundle;
  bundle.split_seed = seed;
  for (std::size_t i = 0; i < sizes.n_detailed_respondents; ++i) {
    bundle.detailed.push_back(panels[order[i]]);
  }
  std::sort(bundle.detailed.begin(), bundle.detailed.end(),
            [](const auto& a, const auto& b) { return a.respondent_id < b.respondent_id; });

  std::vector<ChoiceRecord> remainder;
  for (std::size_t i = sizes.n_detailed_respondents; i < order.size(); ++i) {
    const auto& p = panels[order[i]];
    for (const auto& [ctx, chosen] : p.observations) {
      remainder.push_back({p.respondent_id, p.demographics, ctx, chosen});
    }
  }
  const std::size_t needed = sizes.n_general_records + sizes.n_test_records;
  if (remainder.size() < needed) {
    throw DataError("not enough records outside the detailed set: requested " +
                    std::to_string(needed) + ", have " + std::to_string(remainder.size()) +
                    " (short by " + std::to_string(needed - remainder.size()) + ")");
  }

  std::vector<std::size_t> record_order(remainder.size());
  for (std::size_t i = 0; i < record_order.size(); ++i) record_order[i] = i;
  Rng record_rng(derive_seed(seed, 2));
  record_rng.shuffle(record_order);

  for (std::size_t i = 0; i < sizes.n_general_records; ++i) {
    bundle.general.push_back(remainder[record_order[i]]);
  }
  for (std::size_t i = 0; i < sizes.n_test_records; ++i) {
    bundle.test.push_back(remainder[record_order[sizes.n_general_records + i]]);
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// Dataset summaries (demographics + choice shares per split)

struct CategoryShare {
  std::string category;
  double percent = 0.0;
};

struct VariableSummary {
  std::string variable;
  std::vector<CategoryShare> shares;
};

struct DatasetSummary {
  std::string name;
  std::size_t units = 0;  // respondents for panels, records otherwise
  std::vector<VariableSummary> demographics;
  VariableSummary choices;
};

namespace detail {

inline VariableSummary share_of(std::string variable, const std::vector<std::size_t>& counts,
                                std::size_t dim) {
  VariableSummary vs;
  vs.variable = std::move(variable);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    vs.shares.push_back({std::string(demographic_category_name(dim, k)),
                         total == 0 ? 0.0 : 100.0 * static_cast<double>(counts[k]) /
                                                static_cast<double>(total)});
  }
  return vs;
}

template <typename GetDemo>
inline std::vector<VariableSummary> demographic_summaries(std::size_t n, GetDemo get) {
  std::vector<VariableSummary> out;
  for (std::size_t dim = 0; dim < 4; ++dim) {
    std::vector<std::size_t> counts(kDemographicCardinalities[dim], 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[get(i).category(dim)];
    out.push_back(share_of(std::string(kDemographicVariables[dim]), counts, dim));
  }
  return out;
}

inline VariableSummary choice_summary(const std::vector<Alternative>& choices) {
  VariableSummary vs;
  vs.variable = "choice";
  std::array<std::size_t, 3> counts{};
  for (auto c : choices) ++counts[static_cast<std::size_t>(c)];
  for (std::size_t k = 0; k < 3; ++k) {
    vs.shares.push_back({std::string(kAlternativeNames[k]),
                         choices.empty() ? 0.0 : 100.0 * static_cast<double>(counts[k]) /
                                                     static_cast<double>(choices.size())});
  }
  return vs;
}

}  // namespace detail

inline DatasetSummary summarize_panels(std::string name,
                                       const std::vector<RespondentPanel>& panels) {
  DatasetSummary s;
  s.name = std::move(name);
  s.units = panels.size();
  s.demographics = detail::demographic_summaries(
      panels.size(), [&](std::size_t i) { return panels[i].demographics; });
  std::vector<Alternative> choices;
  for (const auto& p : panels) {
    for (const auto& [ctx, chosen] : p.observations) choices.push_back(chosen);
  }
  s.choices = detail::choice_summary(choices);
  return s;
}

inline DatasetSummary summarize_records(std::string name,
                                        const std::vector<ChoiceRecord>& records) {
  DatasetSummary s;
  s.name = std::move(name);
  s.units = records.size();
  s.demographics = detail::demographic_summaries(
      records.size(), [&](std::size_t i) { return records[i].demographics; });
  std::vector<Alternative> choices;
  for (const auto& r : records) choices.push_back(r.chosen);
  s.choices = detail::choice_summary(choices);
  return s;
}

inline std::vector<DatasetSummary> summarize_dataset(const DatasetBundle& bundle) {
  return {summarize_panels("detailed", bundle.detailed),
          summarize_records("general", bundle.general),
          summarize_records("test", bundle.test)};
}

}  // namespace palign
