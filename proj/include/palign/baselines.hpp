#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/loading.hpp"
#include "palign/oracle.hpp"
#include "palign/persona.hpp"
#include "palign/prompts.hpp"
#include "palign/util.hpp"

namespace palign {

// ---------------------------------------------------------------------------
// Multinomial logit baseline
//
// V_j = asc_j + beta_time * TT_j + beta_cost * CO_j + beta_headway * HE_j,
// with asc_car fixed at 0 as the reference.

struct MnlParams {
  double asc_train = 0.0;
  double asc_swissmetro = 0.0;
  double beta_time = 0.0;     // per minute
  double beta_cost = 0.0;     // per CHF
  double beta_headway = 0.0;  // per minute
  bool ga_zeroes_rail_cost = true;

  std::array<double, 5> std_errors{};
  double final_log_likelihood = 0.0;
  int iterations = 0;

  std::array<double, 5> flat() const {
    return {asc_train, asc_swissmetro, beta_time, beta_cost, beta_headway};
  }
  void set_flat(const std::array<double, 5>& v) {
    asc_train = v[0];
    asc_swissmetro = v[1];
    beta_time = v[2];
    beta_cost = v[3];
    beta_headway = v[4];
  }
};

namespace detail {

// Feature vector of one alternative: (1[train], 1[sm], TT, CO_eff, HE).
inline std::array<double, 5> mnl_features(const ChoiceRecord& rec, Alternative a,
                                          bool ga_zeroes_rail_cost) {
  const auto& m = rec.context.attributes(a);
  double cost = m.cost;
  if (ga_zeroes_rail_cost && rec.context.annual_pass && a != Alternative::Car) {
    cost = 0.0;  // annual pass covers rail modes
  }
  return {a == Alternative::Train ? 1.0 : 0.0, a == Alternative::Swissmetro ? 1.0 : 0.0,
          m.travel_time, cost, m.headway};
}

inline std::array<double, 3> mnl_probabilities(const std::array<double, 5>& theta,
                                               const ChoiceRecord& rec,
                                               bool ga_zeroes_rail_cost) {
  std::array<double, 3> v{};
  for (auto a : kAlternatives) {
    const auto x = mnl_features(rec, a, ga_zeroes_rail_cost);
    double u = 0;
    for (std::size_t p = 0; p < 5; ++p) u += theta[p] * x[p];
    v[static_cast<std::size_t>(a)] = u;
  }
  const double vmax = std::max({v[0], v[1], v[2]});
  std::array<double, 3> prob{};
  double total = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    prob[j] = std::exp(v[j] - vmax);
    total += prob[j];
  }
  for (auto& p : prob) p /= total;
  return prob;
}

// Gaussian elimination with partial pivoting; A is overwritten.
template <std::size_t N>
inline std::array<double, N> solve_linear(std::array<std::array<double, N>, N> a,
                                          std::array<double, N> b) {
  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-14) {
      throw EstimationError("singular system in MNL Newton step");
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < N; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t r = N; r-- > 0;) {
    double acc = b[r];
    for (std::size_t c = r + 1; c < N; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return x;
}

}  // namespace detail

inline double mnl_log_likelihood(const std::array<double, 5>& theta,
                                 const std::vector<ChoiceRecord>& records,
                                 bool ga_zeroes_rail_cost) {
  double ll = 0;
  for (const auto& rec : records) {
    const auto prob = detail::mnl_probabilities(theta, rec, ga_zeroes_rail_cost);
    ll += std::log(prob[static_cast<std::size_t>(rec.chosen)]);
  }
  return ll;
}

// Newton-Raphson MLE; the log-likelihood is globally concave in these
// parameters, so any start converges to the same optimum.
inline MnlParams mnl_fit(const std::vector<ChoiceRecord>& records,
                         bool ga_zeroes_rail_cost = true,
                         const std::array<double, 5>& start = {}) {
  if (records.size() < 50) {
    throw DataError("mnl_fit needs at least 50 records, got " +
                    std::to_string(records.size()));
  }
  std::array<bool, 3> chosen_seen{};
  for (const auto& r : records) chosen_seen[static_cast<std::size_t>(r.chosen)] = true;
  for (auto a : kAlternatives) {
    if (!chosen_seen[static_cast<std::size_t>(a)]) {
      throw EstimationError("mnl_fit: alternative " + std::string(to_string(a)) +
                            " never chosen; ASC unidentified");
    }
  }

  // Slope parameters are identified only if the attribute varies across
  // alternatives somewhere in the data.
  static constexpr std::array<std::string_view, 3> slope_names = {"beta_time", "beta_cost",
                                                                  "beta_headway"};
  std::array<double, 3> variation{};
  for (const auto& rec : records) {
    for (std::size_t s = 0; s < 3; ++s) {
      double mean = 0;
      for (auto a : kAlternatives) {
        mean += detail::mnl_features(rec, a, ga_zeroes_rail_cost)[2 + s];
      }
      mean /= 3.0;
      for (auto a : kAlternatives) {
        const double d = detail::mnl_features(rec, a, ga_zeroes_rail_cost)[2 + s] - mean;
        variation[s] += d * d;
      }
    }
  }
  std::string collinear;
  for (std::size_t s = 0; s < 3; ++s) {
    if (variation[s] < 1e-12) collinear += (collinear.empty() ? "" : ", ") + std::string(slope_names[s]);
  }
  if (!collinear.empty()) {
    throw EstimationError("mnl_fit: no across-alternative variation; unidentified "
                          "parameters: " + collinear);
  }

  std::array<double, 5> theta = start;
  double ll = mnl_log_likelihood(theta, records, ga_zeroes_rail_cost);
  constexpr int kMaxIterations = 500;
  int iterations = 0;
  double grad_norm = 0;

  std::array<double, 5> grad{};
  std::array<std::array<double, 5>, 5> hessian{};
  for (iterations = 0; iterations < kMaxIterations; ++iterations) {
    grad = {};
    hessian = {};
    for (const auto& rec : records) {
      const auto prob = detail::mnl_probabilities(theta, rec, ga_zeroes_rail_cost);
      std::array<std::array<double, 5>, 3> x{};
      std::array<double, 5> xbar{};
      for (auto a : kAlternatives) {
        const auto j = static_cast<std::size_t>(a);
        x[j] = detail::mnl_features(rec, a, ga_zeroes_rail_cost);
        for (std::size_t p = 0; p < 5; ++p) xbar[p] += prob[j] * x[j][p];
      }
      const auto c = static_cast<std::size_t>(rec.chosen);
      for (std::size_t p = 0; p < 5; ++p) grad[p] += x[c][p] - xbar[p];
      for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t p = 0; p < 5; ++p) {
          for (std::size_t q = 0; q < 5; ++q) {
            hessian[p][q] -= prob[j] * (x[j][p] - xbar[p]) * (x[j][q] - xbar[q]);
          }
        }
      }
    }
    grad_norm = 0;
    for (double g : grad) grad_norm = std::max(grad_norm, std::abs(g));
    if (grad_norm < 1e-6) break;

    // Newton direction: solve (-H) d = g, then step with halving.
    std::array<std::array<double, 5>, 5> neg_h{};
    for (std::size_t p = 0; p < 5; ++p) {
      for (std::size_t q = 0; q < 5; ++q) neg_h[p][q] = -hessian[p][q];
    }
    const auto direction = detail::solve_linear<5>(neg_h, grad);
    double step = 1.0;
    for (int halving = 0; halving < 30; ++halving) {
      std::array<double, 5> candidate{};
      for (std::size_t p = 0; p < 5; ++p) candidate[p] = theta[p] + step * direction[p];
      const double candidate_ll =
          mnl_log_likelihood(candidate, records, ga_zeroes_rail_cost);
      if (candidate_ll >= ll - 1e-12) {
        theta = candidate;
        ll = candidate_ll;
        break;
      }
      step /= 2;
    }
  }
  if (grad_norm >= 1e-6) {
    throw EstimationError("mnl_fit did not converge in 500 iterations (gradient sup-norm " +
                          std::to_string(grad_norm) + ")");
  }

  MnlParams out;
  out.set_flat(theta);
  out.ga_zeroes_rail_cost = ga_zeroes_rail_cost;
  out.final_log_likelihood = ll;
  out.iterations = iterations;

  // Standard errors from the observed information: sqrt(diag((-H)^-1)).
  for (std::size_t p = 0; p < 5; ++p) {
    std::array<std::array<double, 5>, 5> neg_h{};
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t c = 0; c < 5; ++c) neg_h[r][c] = -hessian[r][c];
    }
    std::array<double, 5> unit{};
    unit[p] = 1.0;
    out.std_errors[p] = std::sqrt(std::max(0.0, detail::solve_linear<5>(neg_h, unit)[p]));
  }
  return out;
}

struct MnlPrediction {
  std::array<double, 3> probabilities{};
  Alternative argmax = Alternative::Train;
};

inline MnlPrediction mnl_predict(const MnlParams& params, const ChoiceRecord& rec) {
  MnlPrediction out;
  out.probabilities =
      detail::mnl_probabilities(params.flat(), rec, params.ga_zeroes_rail_cost);
  std::size_t best = 0;
  for (std::size_t j = 1; j < 3; ++j) {
    if (out.probabilities[j] > out.probabilities[best]) best = j;
  }
  out.argmax = static_cast<Alternative>(best);
  return out;
}

// ---------------------------------------------------------------------------
// Prompting baselines

inline Alternative zero_shot_predict(const ChoiceRecord& rec, ChoiceOracle& oracle) {
  return simulate_choice(oracle, build_zero_shot_prompt(rec.demographics, rec.context));
}

struct FewShotConfig {
  std::size_t n_examples = 5;  // 0 degenerates to zero-shot
};

// Context distance: per-alternative absolute differences of cost, time and
// headway after min-max normalization over the pool, weights all 1.
inline std::vector<std::size_t> select_few_shot_examples(
    const ChoiceRecord& target, const std::vector<ChoiceRecord>& pool, std::size_t n) {
  if (n > pool.size()) {
    throw DataError("few-shot: n_examples=" + std::to_string(n) + " exceeds pool size " +
                    std::to_string(pool.size()));
  }
  if (n == 0) return {};

  std::array<double, 9> lo, hi;
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  auto attrs9 = [](const ChoiceContext& c) {
    return std::array<double, 9>{c.train.cost,      c.train.travel_time, c.train.headway,
                                 c.swissmetro.cost, c.swissmetro.travel_time,
                                 c.swissmetro.headway, c.car.cost, c.car.travel_time,
                                 c.car.headway};
  };
  for (const auto& r : pool) {
    const auto a = attrs9(r.context);
    for (std::size_t i = 0; i < 9; ++i) {
      lo[i] = std::min(lo[i], a[i]);
      hi[i] = std::max(hi[i], a[i]);
    }
  }
  auto normalized_distance = [&](const ChoiceContext& a, const ChoiceContext& b) {
    const auto xa = attrs9(a);
    const auto xb = attrs9(b);
    double d = 0;
    for (std::size_t i = 0; i < 9; ++i) {
      const double range = hi[i] - lo[i];
      if (range <= 0) continue;  // constant attribute carries no signal
      d += std::abs(xa[i] - xb[i]) / range;
    }
    return d;
  };

  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    scored.emplace_back(normalized_distance(target.context, pool[i].context), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::size_t> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(scored[i].second);
  return out;
}

inline Prompt build_few_shot_prompt(const ChoiceRecord& target,
                                    const std::vector<ChoiceRecord>& pool,
                                    const FewShotConfig& config) {
  const auto selected = select_few_shot_examples(target, pool, config.n_examples);
  std::vector<ChoiceRecord> examples;
  examples.reserve(selected.size());
  for (auto i : selected) examples.push_back(pool[i]);
  return build_few_shot_prompt(target.demographics, target.context, examples);
}

inline Alternative few_shot_predict(const ChoiceRecord& rec,
                                    const std::vector<ChoiceRecord>& pool,
                                    const FewShotConfig& config, ChoiceOracle& oracle) {
  return simulate_choice(oracle, build_few_shot_prompt(rec, pool, config));
}

// ---------------------------------------------------------------------------
// Same-group persona baseline

struct SameGroupDraw {
  std::size_t persona_index = 0;
  int relaxed_variables = 0;  // how many match constraints were dropped
};

// Uniform draw among personas whose source demographics match on all four
// variables; when empty, constraints are relaxed one at a time in the fixed
// order income, age, gender, group.
inline SameGroupDraw same_group_draw(const SocioDemographics& d, const PersonaBasis& basis,
                                     std::uint64_t seed) {
  if (basis.size() == 0) throw DataError("same-group draw over empty persona basis");

  // match masks, loosest last: {gender, age, income, group} minus relaxations
  const std::array<std::array<bool, 4>, 5> stages = {{
      {true, true, true, true},     // all four
      {true, true, false, true},    // income relaxed
      {true, false, false, true},   // + age relaxed
      {false, false, false, true},  // + gender relaxed
      {false, false, false, false}  // any persona
  }};
  for (int stage = 0; stage < 5; ++stage) {
    std::vector<std::size_t> candidates;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const auto& pd = basis.demographics_of(k);
      bool match = true;
      if (stages[static_cast<std::size_t>(stage)][0]) match &= pd.gender == d.gender;
      if (stages[static_cast<std::size_t>(stage)][1]) match &= pd.age_band == d.age_band;
      if (stages[static_cast<std::size_t>(stage)][2]) match &= pd.income_band == d.income_band;
      if (stages[static_cast<std::size_t>(stage)][3]) match &= pd.user_group == d.user_group;
      if (match) candidates.push_back(k);
    }
    if (candidates.empty()) continue;
    Rng rng(seed);
    return {candidates[rng.below(candidates.size())], stage};
  }
  throw DataError("same-group draw found no candidates");  // unreachable
}

inline Alternative same_group_predict(const ChoiceRecord& rec, const PersonaBasis& basis,
                                      ChoiceOracle& oracle, std::uint64_t seed) {
  const auto draw = same_group_draw(rec.demographics, basis, seed);
  Prompt prompt = build_simulation_prompt(rec.demographics, rec.context,
                                          basis.personas[draw.persona_index]);
  return simulate_choice(oracle, prompt);
}

}  // namespace palign
