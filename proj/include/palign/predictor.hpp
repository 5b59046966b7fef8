#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/io.hpp"
#include "palign/loading.hpp"
#include "palign/oracle.hpp"
#include "palign/persona.hpp"
#include "palign/prompts.hpp"

namespace palign {

enum class Aggregation { SingleDraw, MajorityVote };

struct PredictionConfig {
  int repeats = 1;
  Aggregation aggregation = Aggregation::SingleDraw;
  std::uint64_t seed = 0;
  int max_parallel = 1;

  void validate() const {
    if (repeats < 1) throw ConfigError("prediction repeats must be >= 1");
    if (max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  }
};

struct PredictionEntry {
  std::size_t record_index = 0;
  std::string record_id;
  Alternative predicted = Alternative::Train;
  bool failed = false;
  std::vector<std::string> persona_ids;
  std::string raw_response;
  std::string response_digest;
};

struct PredictionSetManifest {
  std::string method;
  std::string params_version;
  std::string basis_version;
  std::string oracle_identity;
  std::string prompt_version;
  std::uint64_t seed = 0;
};

struct PredictionSet {
  PredictionSetManifest manifest;
  std::vector<PredictionEntry> entries;

  std::size_t failed_count() const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.failed ? 1 : 0;
    return n;
  }
};

namespace detail {

// Majority vote with ties broken by the fixed order Train < Swissmetro < Car.
inline Alternative majority(const std::vector<Alternative>& votes) {
  std::array<int, 3> counts{};
  for (auto v : votes) ++counts[static_cast<std::size_t>(v)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return static_cast<Alternative>(best);
}

}  // namespace detail

// Per record: draw a persona from the loading distribution, simulate, repeat
// R times (fresh draw each repeat), aggregate.
inline PredictionSet predict(const std::vector<ChoiceRecord>& test,
                             const EmbeddingParams& params, const PersonaBasis& basis,
                             ChoiceOracle& oracle, const PredictionConfig& config,
                             double lambda = kDefaultLambda) {
  config.validate();
  if (basis.size() == 0) throw DataError("predict: empty persona basis");
  params.validate();

  PredictionSet set;
  set.manifest.method = "persona-loading";
  set.manifest.params_version = params_digest(params);
  set.manifest.basis_version = basis_digest(basis);
  set.manifest.oracle_identity = oracle.identity();
  set.manifest.prompt_version = std::string(kPromptVersion);
  set.manifest.seed = config.seed;
  set.entries.resize(test.size());

  parallel_for(test.size(), config.max_parallel, [&](std::size_t i) {
    const auto& rec = test[i];
    PredictionEntry entry;
    entry.record_index = i;
    entry.record_id = rec.respondent_id + "#" + std::to_string(i);
    const auto dist = loading_distribution(rec.demographics, params, basis, lambda);

    std::vector<Alternative> votes;
    std::string last_response;
    for (int r = 0; r < config.repeats; ++r) {
      const auto pick =
          sample_personas(dist, 1,
                          derive_seed(config.seed, i * 4096 + static_cast<std::size_t>(r)))
              .front();
      const auto& persona = basis.personas[pick];
      Prompt prompt = build_simulation_prompt(rec.demographics, rec.context, persona);
      prompt.metadata.record_id = entry.record_id;
      try {
        const std::string response = oracle.complete(prompt);
        votes.push_back(parse_choice_response(response));
        last_response = response;
        entry.persona_ids.push_back(persona.source_respondent_id);
      } catch (const OracleError&) {
        // failed repeats are dropped; the record fails when none succeed
      }
    }
    if (votes.empty()) {
      entry.failed = true;
    } else {
      entry.predicted = config.aggregation == Aggregation::MajorityVote
                            ? detail::majority(votes)
                            : votes.front();
      entry.raw_response = last_response;
      entry.response_digest = sha256_hex(last_response);
    }
    set.entries[i] = std::move(entry);
  });
  return set;
}

// ---------------------------------------------------------------------------
// Persistence

inline void save_prediction_set(const std::filesystem::path& path, const PredictionSet& set) {
  std::vector<json> rows;
  rows.push_back(json{{"kind", "prediction_set"},
                      {"method", set.manifest.method},
                      {"params_version", set.manifest.params_version},
                      {"basis_version", set.manifest.basis_version},
                      {"oracle", set.manifest.oracle_identity},
                      {"prompt_version", set.manifest.prompt_version},
                      {"seed", set.manifest.seed}});
  for (const auto& e : set.entries) {
    rows.push_back(json{{"kind", "prediction"},
                        {"record_index", e.record_index},
                        {"record_id", e.record_id},
                        {"predicted", to_string(e.predicted)},
                        {"failed", e.failed},
                        {"persona_ids", e.persona_ids},
                        {"response_digest", e.response_digest},
                        {"raw_response", e.raw_response}});
  }
  write_jsonl(path, rows);
}

inline PredictionSet load_prediction_set(const std::filesystem::path& path) {
  PredictionSet set;
  for (const auto& row : read_jsonl(path)) {
    const auto kind = row.at("kind").get<std::string>();
    if (kind == "prediction_set") {
      set.manifest.method = row.at("method").get<std::string>();
      set.manifest.params_version = row.at("params_version").get<std::string>();
      set.manifest.basis_version = row.at("basis_version").get<std::string>();
      set.manifest.oracle_identity = row.at("oracle").get<std::string>();
      set.manifest.prompt_version = row.at("prompt_version").get<std::string>();
      set.manifest.seed = row.at("seed").get<std::uint64_t>();
      continue;
    }
    if (kind != "prediction") throw DataError("unexpected row kind in prediction file");
    PredictionEntry e;
    e.record_index = row.at("record_index").get<std::size_t>();
    e.record_id = row.at("record_id").get<std::string>();
    e.predicted = alternative_from_string(row.at("predicted").get<std::string>());
    e.failed = row.at("failed").get<bool>();
    e.persona_ids = row.at("persona_ids").get<std::vector<std::string>>();
    e.response_digest = row.at("response_digest").get<std::string>();
    e.raw_response = row.at("raw_response").get<std::string>();
    set.entries.push_back(std::move(e));
  }
  return set;
}

}  // namespace palign
