#pragma once

#include <algorithm>
#include <ctime>
#include <string>
#include <vector>

#include "palign/oracle.hpp"
#include "palign/persona.hpp"
#include "palign/prompts.hpp"

namespace palign {

inline std::string utc_date_string() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof(buf), "%Y-%m-%d", &tm);
  return buf;
}

struct InferenceResult {
  PersonaBasis basis;
  std::vector<std::string> failed_ids;
};

// One persona per panel. A failed parse is retried once with a corrective
// suffix; panels still failing are excluded from the basis and reported.
inline InferenceResult infer_personas(const std::vector<RespondentPanel>& detailed,
                                      ChoiceOracle& expert, int max_parallel = 1) {
  if (detailed.empty()) throw DataError("infer_personas: no panels given");

  std::vector<std::optional<Persona>> results(detailed.size());
  std::vector<std::optional<std::string>> failures(detailed.size());

  parallel_for(detailed.size(), max_parallel, [&](std::size_t i) {
    const auto& panel = detailed[i];
    Prompt prompt = build_inference_prompt(panel);
    try {
      try {
        results[i] = parse_persona(infer_persona_text(expert, prompt), panel.respondent_id);
      } catch (const OracleError& e) {
        if (e.kind() != OracleError::Kind::ResponseFormat) throw;
        Prompt retry = prompt;
        retry.user_text +=
            "\nYour previous reply could not be parsed. Reply only with the six "
            "'<factor>: <integer 1-10>' lines, one per line, nothing else.\n";
        results[i] = parse_persona(infer_persona_text(expert, retry), panel.respondent_id);
      }
    } catch (const OracleError& e) {
      failures[i] = std::string(e.what());
    }
  });

  InferenceResult out;
  for (std::size_t i = 0; i < detailed.size(); ++i) {
    if (results[i]) {
      out.basis.personas.push_back(*results[i]);
      out.basis.demographics_index[detailed[i].respondent_id] = detailed[i].demographics;
    } else {
      out.failed_ids.push_back(detailed[i].respondent_id);
    }
  }
  std::sort(out.basis.personas.begin(), out.basis.personas.end(),
            [](const Persona& a, const Persona& b) {
              return a.source_respondent_id < b.source_respondent_id;
            });
  std::sort(out.failed_ids.begin(), out.failed_ids.end());

  out.basis.provenance.expert_identity = expert.identity();
  out.basis.provenance.prompt_version = std::string(kPromptVersion);
  out.basis.provenance.date = utc_date_string();

  if (out.failed_ids.size() * 10 > detailed.size()) {
    throw OracleError(OracleError::Kind::ResponseFormat,
                      "persona inference failed for " +
                          std::to_string(out.failed_ids.size()) + " of " +
                          std::to_string(detailed.size()) +
                          " panels (more than 10%); revise the expert prompt or model");
  }
  return out;
}

}  // namespace palign
