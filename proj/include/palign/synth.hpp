#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "palign/baselines.hpp"
#include "palign/domain.hpp"
#include "palign/oracle.hpp"
#include "palign/persona.hpp"
#include "palign/prompts.hpp"
#include "palign/util.hpp"

namespace palign {

inline SocioDemographics random_demographics(Rng& rng) {
  SocioDemographics d;
  d.gender = static_cast<Gender>(rng.below(2));
  d.age_band = static_cast<AgeBand>(rng.below(5));
  d.income_band = static_cast<IncomeBand>(rng.below(3));
  d.user_group = static_cast<UserGroup>(rng.below(2));
  return d;
}

inline ChoiceContext random_context_fields(Rng& rng, ChoiceContext c = {}) {
  c.purpose = static_cast<Purpose>(rng.below(8));
  c.first_class = rng.below(2) == 1;
  c.who_pays = static_cast<Payer>(rng.below(3));
  c.luggage = static_cast<Luggage>(rng.below(3));
  c.annual_pass = rng.below(2) == 1;
  return c;
}

// Independent attribute draws; used by expert-faithfulness style experiments.
inline ChoiceContext random_context(Rng& rng) {
  ChoiceContext c = random_context_fields(rng);
  c.train = {rng.uniform(20, 180), rng.uniform(30, 180), rng.uniform(20, 120)};
  c.swissmetro = {rng.uniform(20, 180), rng.uniform(30, 180), rng.uniform(20, 120)};
  c.car = {rng.uniform(20, 180), rng.uniform(30, 180), 0.0};
  return c;
}

inline Persona extreme_persona(Factor dominant, std::string id = "gen") {
  Persona p;
  p.source_respondent_id = std::move(id);
  p.ratings.fill(1);
  p.ratings[static_cast<std::size_t>(dominant)] = 10;
  return p;
}

// ---------------------------------------------------------------------------
// Recoverability scenario: the latent preference type is keyed to user_group
// (car users are time-driven, train users are cost-driven), and every context
// separates the fastest from the cheapest alternative.

struct RecoverabilityConfig {
  std::size_t n_detailed = 40;
  std::size_t n_general = 200;
  std::size_t n_test = 100;
  std::size_t observations_per_panel = 9;
  std::uint64_t seed = 0;
};

// Fast and cheap are always different modes, with wide margins so the
// generating persona's preferred attribute decides the choice.
inline ChoiceContext recoverability_context(Rng& rng) {
  ChoiceContext c = random_context_fields(rng);
  const auto fast = static_cast<std::size_t>(rng.below(3));
  const auto cheap = (fast + 1 + static_cast<std::size_t>(rng.below(2))) % 3;
  std::array<ModeAttributes, 3> attrs;
  for (std::size_t j = 0; j < 3; ++j) {
    attrs[j].travel_time = j == fast ? 40.0 : rng.uniform(170, 200);
    attrs[j].cost = j == cheap ? 25.0 : rng.uniform(160, 200);
    attrs[j].headway = j == 2 ? 0.0 : rng.uniform(20, 60);
  }
  c.train = attrs[0];
  c.swissmetro = attrs[1];
  c.car = attrs[2];
  return c;
}

inline Persona latent_persona(UserGroup group) {
  return extreme_persona(group == UserGroup::CarUser ? Factor::TravelTime
                                                     : Factor::TravelCost,
                         group == UserGroup::CarUser ? "latent-time" : "latent-cost");
}

inline Alternative recoverability_choice(const SocioDemographics& d, const ChoiceContext& x,
                                         ChoiceOracle& oracle) {
  return simulate_choice(oracle, build_simulation_prompt(d, x, latent_persona(d.user_group)));
}

inline DatasetBundle synth_recoverability_bundle(const RecoverabilityConfig& config,
                                                 ChoiceOracle& oracle) {
  DatasetBundle bundle;
  bundle.split_seed = config.seed;
  Rng rng(derive_seed(config.seed, 11));

  for (std::size_t i = 0; i < config.n_detailed; ++i) {
    RespondentPanel panel;
    panel.respondent_id = "synth-" + std::to_string(1000 + i);
    panel.demographics = random_demographics(rng);
    panel.demographics.user_group = static_cast<UserGroup>(i % 2);  // balanced groups
    for (std::size_t j = 0; j < config.observations_per_panel; ++j) {
      const auto ctx = recoverability_context(rng);
      panel.observations.emplace_back(
          ctx, recoverability_choice(panel.demographics, ctx, oracle));
    }
    bundle.detailed.push_back(std::move(panel));
  }

  auto make_record = [&](std::size_t i, std::string_view prefix) {
    ChoiceRecord rec;
    rec.respondent_id = std::string(prefix) + std::to_string(i);
    rec.demographics = random_demographics(rng);
    rec.context = recoverability_context(rng);
    rec.chosen = recoverability_choice(rec.demographics, rec.context, oracle);
    return rec;
  };
  for (std::size_t i = 0; i < config.n_general; ++i) {
    bundle.general.push_back(make_record(i, "synth-g"));
  }
  for (std::size_t i = 0; i < config.n_test; ++i) {
    bundle.test.push_back(make_record(i, "synth-t"));
  }
  return bundle;
}

// ---------------------------------------------------------------------------
// MNL consistency scenario: records drawn from a known multinomial logit.

inline ChoiceContext mnl_scenario_context(Rng& rng) {
  ChoiceContext c = random_context_fields(rng);
  c.annual_pass = false;  // keep cost effective for all modes
  c.train = {rng.uniform(10, 150), rng.uniform(30, 180), rng.uniform(20, 120)};
  c.swissmetro = {rng.uniform(10, 150), rng.uniform(30, 180), rng.uniform(20, 120)};
  c.car = {rng.uniform(10, 150), rng.uniform(30, 180), 0.0};
  return c;
}

inline std::vector<ChoiceRecord> synth_mnl_records(std::size_t n, std::uint64_t seed,
                                                   const MnlParams& truth) {
  std::vector<ChoiceRecord> records;
  records.reserve(n);
  Rng rng(derive_seed(seed, 23));
  for (std::size_t i = 0; i < n; ++i) {
    ChoiceRecord rec;
    rec.respondent_id = "mnl-" + std::to_string(i);
    rec.demographics = random_demographics(rng);
    rec.context = mnl_scenario_context(rng);
    const auto prob =
        detail::mnl_probabilities(truth.flat(), rec, truth.ga_zeroes_rail_cost);
    const double u = rng.uniform01();
    rec.chosen = u < prob[0]               ? Alternative::Train
                 : u < prob[0] + prob[1]   ? Alternative::Swissmetro
                                           : Alternative::Car;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace palign
