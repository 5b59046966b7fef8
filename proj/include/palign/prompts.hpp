#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/persona.hpp"
#include "palign/prompt.hpp"

namespace palign {

// Bump when any template text changes; stamped into manifests and basis
// provenance so results always cite the prompt wording they were produced with.
inline constexpr std::string_view kPromptVersion = "pv1";

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

namespace detail {

inline std::string_view phrase(Gender g) { return g == Gender::Male ? "male" : "female"; }

inline std::string_view phrase(AgeBand a) {
  switch (a) {
    case AgeBand::Under25: return "under 25";
    case AgeBand::From25To39: return "25 to 39";
    case AgeBand::From40To54: return "40 to 54";
    case AgeBand::From55To65: return "55 to 65";
    case AgeBand::Over65: return "over 65";
  }
  throw DataError("invalid age band");
}

inline std::string_view phrase(IncomeBand i) {
  switch (i) {
    case IncomeBand::Under50k: return "under 50,000 CHF per year";
    case IncomeBand::From50kTo100k: return "50,000 to 100,000 CHF per year";
    case IncomeBand::Over100k: return "over 100,000 CHF per year";
  }
  throw DataError("invalid income band");
}

inline std::string_view phrase(UserGroup u) {
  return u == UserGroup::CarUser ? "car user" : "train user";
}

inline std::string_view phrase(Purpose p) {
  switch (p) {
    case Purpose::Commute: return "commuting";
    case Purpose::Shopping: return "shopping";
    case Purpose::Business: return "business";
    case Purpose::Leisure: return "leisure";
    case Purpose::ReturnFromWork: return "return from work";
    case Purpose::ReturnFromShopping: return "return from shopping";
    case Purpose::ReturnFromBusiness: return "return from business";
    case Purpose::ReturnFromLeisure: return "return from leisure";
  }
  throw DataError("invalid purpose");
}

inline std::string_view phrase(Payer p) {
  switch (p) {
    case Payer::Self: return "paid by the traveler";
    case Payer::Half: return "split half-half with the employer";
    case Payer::Employer: return "paid by the employer";
  }
  throw DataError("invalid payer");
}

inline std::string_view phrase(Luggage l) {
  switch (l) {
    case Luggage::None: return "none";
    case Luggage::One: return "one piece";
    case Luggage::Several: return "several pieces";
  }
  throw DataError("invalid luggage");
}

inline std::string render_profile(const SocioDemographics& d) {
  std::string out = "Traveler profile:\n";
  out += "- gender: " + std::string(phrase(d.gender)) + "\n";
  out += "- age band: " + std::string(phrase(d.age_band)) + "\n";
  out += "- annual income: " + std::string(phrase(d.income_band)) + "\n";
  out += "- habitual mode user group: " + std::string(phrase(d.user_group)) + "\n";
  return out;
}

inline std::string render_preferences(const Persona& z) {
  std::string out = "Traveler preferences (1 = does not value, 10 = values highly):\n";
  for (std::size_t f = 0; f < kFactorCount; ++f) {
    out += "- " + std::string(kFactorLabels[f]) + ": " + std::to_string(z.ratings[f]) + "\n";
  }
  if (z.summary_text) out += "- notes: " + *z.summary_text + "\n";
  return out;
}

inline std::string render_trip_fields(const ChoiceContext& c) {
  std::string out;
  out += "- trip purpose: " + std::string(phrase(c.purpose)) + "\n";
  out += std::string("- ticket class: ") + (c.first_class ? "first" : "second") + "\n";
  out += "- trip cost coverage: " + std::string(phrase(c.who_pays)) + "\n";
  out += "- luggage: " + std::string(phrase(c.luggage)) + "\n";
  out += std::string("- annual rail pass: ") + (c.annual_pass ? "yes" : "no") + "\n";
  return out;
}

inline std::string_view mode_title(Alternative a) {
  switch (a) {
    case Alternative::Train: return "Train";
    case Alternative::Swissmetro: return "Swissmetro";
    case Alternative::Car: return "Car";
  }
  throw DataError("invalid alternative");
}

inline std::string render_mode_line(std::string_view name, const ModeAttributes& m) {
  return "- " + std::string(name) + ": cost " + format_number(m.cost) +
         " CHF, travel time " + format_number(m.travel_time) + " minutes, headway " +
         format_number(m.headway) + " minutes\n";
}

inline std::string render_alternatives(const ChoiceContext& c) {
  std::string out = "Alternatives:\n";
  out += render_mode_line("Train", c.train);
  out += render_mode_line("Swissmetro", c.swissmetro);
  out += render_mode_line("Car", c.car);
  return out;
}

inline std::string render_trip_context(const ChoiceContext& c) {
  return "Trip context:\n" + render_trip_fields(c) + "\n" + render_alternatives(c);
}

}  // namespace detail

inline constexpr std::string_view kChoiceBackbone =
    "You are a travel behavior analyst for a Swiss intercity corridor study. "
    "Three transport modes can be offered: Train, Swissmetro (a proposed high-speed "
    "underground rail service), and Car. Given a traveler's description and the "
    "alternatives of one trip, predict the mode this traveler actually chooses. "
    "You may reason briefly, but the last line of your reply must be exactly "
    "'Final answer: <mode>' where <mode> is Train, Swissmetro, or Car.";

inline constexpr std::string_view kFewShotBackbone =
    "You are a travel behavior analyst for a Swiss intercity corridor study. "
    "Three transport modes can be offered: Train, Swissmetro (a proposed high-speed "
    "underground rail service), and Car. First study the solved example trips, "
    "then predict the mode the target traveler actually chooses. You may reason "
    "briefly, but the last line of your reply must be exactly 'Final answer: <mode>' "
    "where <mode> is Train, Swissmetro, or Car.";

inline constexpr std::string_view kExpertBackbone =
    "You are a travel behavior expert. You will see one traveler's profile and "
    "their observed mode choices across several trip scenarios from a Swiss "
    "corridor survey offering Train, Swissmetro (a proposed high-speed underground "
    "rail service), and Car. Infer how strongly this traveler values each listed "
    "behavioral factor. Reply with one line per factor in exactly the format "
    "'<factor>: <integer 1-10>' (higher means the traveler values it more), in the "
    "order given. You may add one line 'summary: <free text>'.";

// Prompt for the expert oracle: demographics plus all observed context-choice
// pairs, with a machine-readable rating block requested.
inline Prompt build_inference_prompt(const RespondentPanel& panel) {
  if (panel.observations.empty()) {
    throw DataError("cannot build inference prompt from empty panel");
  }
  std::string user = detail::render_profile(panel.demographics);
  user += "\nObserved choices:\n";
  for (std::size_t j = 0; j < panel.observations.size(); ++j) {
    const auto& [ctx, chosen] = panel.observations[j];
    user += "Scenario " + std::to_string(j + 1) + ":\n";
    user += detail::render_trip_fields(ctx);
    user += detail::render_mode_line("Train", ctx.train);
    user += detail::render_mode_line("Swissmetro", ctx.swissmetro);
    user += detail::render_mode_line("Car", ctx.car);
    user += "- chosen mode: " + std::string(detail::mode_title(chosen)) + "\n\n";
  }
  user += "Rate how much this traveler values each factor (integers 1 to 10):\n";
  for (auto label : kFactorLabels) {
    user += std::string(label) + ": <1-10>\n";
  }
  Prompt p;
  p.system_text = std::string(kExpertBackbone);
  p.user_text = std::move(user);
  p.metadata.record_id = panel.respondent_id;
  return p;
}

// Prompt for choice simulation: direct prediction framing, persona included.
inline Prompt build_simulation_prompt(const SocioDemographics& d, const ChoiceContext& x,
                                      const Persona& z) {
  z.validate();
  std::string user = detail::render_profile(d);
  user += "\n" + detail::render_preferences(z);
  user += "\n" + detail::render_trip_context(x);
  user += "\nWhich mode does this traveler choose?\n";
  user += "Final answer: <Train|Swissmetro|Car>\n";
  Prompt p;
  p.system_text = std::string(kChoiceBackbone);
  p.user_text = std::move(user);
  p.metadata.persona_id = z.source_respondent_id;
  return p;
}

// Zero-shot prompt: demographics and context only.
inline Prompt build_zero_shot_prompt(const SocioDemographics& d, const ChoiceContext& x) {
  std::string user = detail::render_profile(d);
  user += "\n" + detail::render_trip_context(x);
  user += "\nWhich mode does this traveler choose?\n";
  user += "Final answer: <Train|Swissmetro|Car>\n";
  Prompt p;
  p.system_text = std::string(kChoiceBackbone);
  p.user_text = std::move(user);
  return p;
}

// Few-shot prompt: solved examples (most context-similar first) before the
// zero-shot body. With no examples this is byte-identical to zero-shot.
inline Prompt build_few_shot_prompt(const SocioDemographics& d, const ChoiceContext& x,
                                    const std::vector<ChoiceRecord>& examples) {
  if (examples.empty()) return build_zero_shot_prompt(d, x);
  std::string user = "Solved example trips:\n";
  for (std::size_t j = 0; j < examples.size(); ++j) {
    const auto& ex = examples[j];
    user += "Example " + std::to_string(j + 1) + ":\n";
    user += detail::render_profile(ex.demographics);
    user += detail::render_trip_context(ex.context);
    user += "- chosen mode: " + std::string(detail::mode_title(ex.chosen)) + "\n\n";
  }
  user += "Target trip:\n";
  user += detail::render_profile(d);
  user += "\n" + detail::render_trip_context(x);
  user += "\nWhich mode does this traveler choose?\n";
  user += "Final answer: <Train|Swissmetro|Car>\n";
  Prompt p;
  p.system_text = std::string(kFewShotBackbone);
  p.user_text = std::move(user);
  return p;
}

}  // namespace palign
