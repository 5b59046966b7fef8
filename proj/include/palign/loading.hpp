#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/io.hpp"
#include "palign/persona.hpp"
#include "palign/util.hpp"

namespace palign {

inline constexpr double kDefaultLambda = 40.0 / 3.0;

// One scalar per category of each socio-demographic variable: 2+5+3+2 = 12.
struct EmbeddingParams {
  std::array<double, 2> gender{};
  std::array<double, 5> age{};
  std::array<double, 3> income{};
  std::array<double, 2> group{};

  static constexpr std::size_t kTotal = 12;

  double* dim_data(std::size_t dim) {
    switch (dim) {
      case 0: return gender.data();
      case 1: return age.data();
      case 2: return income.data();
      case 3: return group.data();
      default: throw DataError("embedding dimension out of range");
    }
  }
  const double* dim_data(std::size_t dim) const {
    return const_cast<EmbeddingParams*>(this)->dim_data(dim);
  }

  double at(std::size_t dim, std::size_t category) const {
    return dim_data(dim)[category];
  }
  double& at(std::size_t dim, std::size_t category) { return dim_data(dim)[category]; }

  // Flat dim-major view: gender[0..1], age[0..4], income[0..2], group[0..1].
  double flat(std::size_t i) const {
    auto [dim, cat] = flat_index(i);
    return at(dim, cat);
  }
  double& flat(std::size_t i) {
    auto [dim, cat] = flat_index(i);
    return at(dim, cat);
  }

  static std::pair<std::size_t, std::size_t> flat_index(std::size_t i) {
    for (std::size_t dim = 0; dim < 4; ++dim) {
      if (i < kDemographicCardinalities[dim]) return {dim, i};
      i -= kDemographicCardinalities[dim];
    }
    throw DataError("flat embedding index out of range");
  }

  void validate() const {
    for (std::size_t i = 0; i < kTotal; ++i) {
      if (!std::isfinite(flat(i))) throw DataError("embedding parameter not finite");
    }
  }

  // Degenerate all-zero parameter vectors are rejected at save time.
  void validate_for_save() const {
    validate();
    for (std::size_t dim = 0; dim < 4; ++dim) {
      bool any = false;
      for (std::size_t c = 0; c < kDemographicCardinalities[dim]; ++c) {
        if (at(dim, c) != 0.0) any = true;
      }
      if (!any) {
        throw DataError("degenerate embedding parameters: all-zero vector for " +
                        std::string(kDemographicVariables[dim]));
      }
    }
  }

  bool operator==(const EmbeddingParams&) const = default;
};

using EmbeddingVector = std::array<double, 4>;

inline EmbeddingParams random_params(std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingParams p;
  for (std::size_t i = 0; i < EmbeddingParams::kTotal; ++i) p.flat(i) = rng.normal();
  return p;
}

// Component m is the scalar of beta_m at d's observed category (beta_m against
// the one-hot encoding of variable m).
inline EmbeddingVector embed(const SocioDemographics& d, const EmbeddingParams& params) {
  EmbeddingVector e;
  for (std::size_t dim = 0; dim < 4; ++dim) e[dim] = params.at(dim, d.category(dim));
  return e;
}

inline double norm2(const EmbeddingVector& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Cosine similarity, clamped to [-1, 1] against rounding. Bitwise-equal
// inputs short-circuit to exactly 1 so self-similarity is exact.
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) {
    throw EstimationError("degenerate zero embedding vector in cosine similarity");
  }
  if (a == b) return 1.0;
  double dot = 0;
  for (std::size_t i = 0; i < 4; ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

struct LoadingDistribution {
  std::vector<double> probabilities;
  double lambda_used = kDefaultLambda;

  void validate() const {
    double sum = 0;
    for (double p : probabilities) {
      if (!(p >= 0.0 && p <= 1.0)) throw DataError("loading probability outside [0,1]");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw DataError("loading distribution does not sum to 1");
    }
  }
};

inline std::vector<double> similarity_row(const SocioDemographics& d,
                                          const EmbeddingParams& params,
                                          const PersonaBasis& basis) {
  const EmbeddingVector e_i = embed(d, params);
  std::vector<double> sims(basis.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    sims[k] = cosine_similarity(e_i, embed(basis.demographics_of(k), params));
  }
  return sims;
}

// Weighted softmax over similarities, computed with max subtraction.
inline LoadingDistribution softmax_distribution(const std::vector<double>& similarities,
                                                double lambda) {
  if (similarities.empty()) throw DataError("softmax over empty similarity vector");
  LoadingDistribution dist;
  dist.lambda_used = lambda;
  dist.probabilities.resize(similarities.size());
  double max_s = -std::numeric_limits<double>::infinity();
  for (double s : similarities) max_s = std::max(max_s, lambda * s);
  double total = 0;
  for (std::size_t k = 0; k < similarities.size(); ++k) {
    dist.probabilities[k] = std::exp(lambda * similarities[k] - max_s);
    total += dist.probabilities[k];
  }
  for (auto& p : dist.probabilities) p /= total;
  return dist;
}

inline LoadingDistribution loading_distribution(const SocioDemographics& d,
                                                const EmbeddingParams& params,
                                                const PersonaBasis& basis,
                                                double lambda = kDefaultLambda) {
  if (basis.size() == 0) throw DataError("loading distribution over empty persona basis");
  return softmax_distribution(similarity_row(d, params, basis), lambda);
}

// L distinct indices via sequential weighted draws without replacement,
// renormalizing after each draw.
inline std::vector<std::size_t> sample_personas(const LoadingDistribution& dist,
                                                std::size_t L, std::uint64_t rng_seed) {
  const std::size_t K = dist.probabilities.size();
  if (L < 1 || L > K) {
    throw DataError("sample_personas: L=" + std::to_string(L) +
                    " outside [1, K=" + std::to_string(K) + "]");
  }
  std::vector<double> weights = dist.probabilities;
  std::vector<std::size_t> chosen;
  chosen.reserve(L);
  Rng rng(rng_seed);
  for (std::size_t draw = 0; draw < L; ++draw) {
    double total = 0;
    for (double w : weights) total += w;
    const double u = rng.uniform01() * total;
    double acc = 0;
    std::size_t pick = K;
    for (std::size_t k = 0; k < K; ++k) {
      if (weights[k] <= 0) continue;
      acc += weights[k];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    if (pick == K) {  // rounding at the upper edge: take the last positive
      for (std::size_t k = K; k-- > 0;) {
        if (weights[k] > 0) {
          pick = k;
          break;
        }
      }
    }
    chosen.push_back(pick);
    weights[pick] = 0;
  }
  return chosen;
}

// ---------------------------------------------------------------------------
// Similarity / loading condition checks

struct ConditionReport {
  bool passed = true;
  std::vector<std::string> violations;

  void fail(std::string what) {
    passed = false;
    violations.push_back(std::move(what));
  }
};

inline void check_normalization(const std::vector<double>& probabilities,
                                ConditionReport& report, const std::string& witness) {
  double sum = 0;
  for (double p : probabilities) sum += p;
  if (std::abs(sum - 1.0) > 1e-12) {
    report.fail("normalization violated (sum=" + std::to_string(sum) + ") for " + witness);
  }
}

inline void check_monotonicity(const std::vector<double>& similarities,
                               const std::vector<double>& probabilities,
                               ConditionReport& report, const std::string& witness) {
  for (std::size_t a = 0; a < similarities.size(); ++a) {
    for (std::size_t b = a + 1; b < similarities.size(); ++b) {
      const bool sim_ge = similarities[a] >= similarities[b];
      const bool prob_ge = probabilities[a] >= probabilities[b];
      const bool sim_le = similarities[a] <= similarities[b];
      const bool prob_le = probabilities[a] <= probabilities[b];
      if ((sim_ge && !prob_ge) || (sim_le && !prob_le)) {
        report.fail("monotonicity violated for " + witness + " personas " +
                    std::to_string(a) + "," + std::to_string(b));
        return;
      }
    }
  }
}

// Verifies boundedness, symmetry, self-similarity, normalization and
// monotonicity over every pair in the profile sample.
inline ConditionReport check_similarity_conditions(
    const EmbeddingParams& params, const std::vector<SocioDemographics>& profiles,
    double lambda = kDefaultLambda) {
  if (profiles.empty()) throw DataError("condition check needs a non-empty profile sample");
  ConditionReport report;

  std::vector<EmbeddingVector> embeddings;
  embeddings.reserve(profiles.size());
  for (const auto& d : profiles) embeddings.push_back(embed(d, params));

  for (std::size_t i = 0; i < profiles.size(); ++i) {
    const double self = cosine_similarity(embeddings[i], embeddings[i]);
    std::vector<double> sims(profiles.size());
    for (std::size_t k = 0; k < profiles.size(); ++k) {
      const double s_ik = cosine_similarity(embeddings[i], embeddings[k]);
      const double s_ki = cosine_similarity(embeddings[k], embeddings[i]);
      sims[k] = s_ik;
      if (!(std::abs(s_ik) <= 1.0)) {
        report.fail("boundedness violated at pair (" + std::to_string(i) + "," +
                    std::to_string(k) + "): s=" + std::to_string(s_ik));
      }
      if (std::abs(s_ik - s_ki) > 1e-12) {
        report.fail("symmetry violated at pair (" + std::to_string(i) + "," +
                    std::to_string(k) + ")");
      }
      if (self < s_ik) {
        report.fail("self-similarity violated at pair (" + std::to_string(i) + "," +
                    std::to_string(k) + "): s(i,i)=" + std::to_string(self) +
                    " < s(i,k)=" + std::to_string(s_ik));
      }
    }
    const auto dist = softmax_distribution(sims, lambda);
    const std::string witness = "profile " + std::to_string(i);
    check_normalization(dist.probabilities, report, witness);
    check_monotonicity(sims, dist.probabilities, report, witness);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Persistence

inline constexpr int kParamsSchemaVersion = 1;

inline json to_json(const EmbeddingParams& p) {
  return json{{"kind", "embedding_params"},
              {"schema_version", kParamsSchemaVersion},
              {"gender", p.gender},
              {"age", p.age},
              {"income", p.income},
              {"group", p.group}};
}

inline void save_params(const std::filesystem::path& path, const EmbeddingParams& p) {
  p.validate_for_save();
  write_file(path, to_json(p).dump(2) + "\n");
}

inline EmbeddingParams params_from_json(const json& j) {
  if (j.at("schema_version").get<int>() != kParamsSchemaVersion) {
    throw DataError("unsupported embedding params schema version");
  }
  EmbeddingParams p;
  j.at("gender").get_to(p.gender);
  j.at("age").get_to(p.age);
  j.at("income").get_to(p.income);
  j.at("group").get_to(p.group);
  p.validate();
  return p;
}

inline EmbeddingParams load_params(const std::filesystem::path& path) {
  return params_from_json(json::parse(read_file(path)));
}

inline std::string params_digest(const EmbeddingParams& p) {
  return sha256_hex(to_json(p).dump());
}

}  // namespace palign
