#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "palign/loading.hpp"
#include "palign/synth.hpp"

using namespace palign;

namespace {

PersonaBasis basis_of(const std::vector<SocioDemographics>& profiles) {
  PersonaBasis basis;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    Persona p = extreme_persona(Factor::Comfort, "b" + std::to_string(100 + i));
    basis.personas.push_back(p);
    basis.demographics_index[p.source_respondent_id] = profiles[i];
  }
  return basis;
}

}  // namespace

TEST_CASE("embed selects the beta entry of the observed category") {
  EmbeddingParams params;
  params.gender = {0.2, 0.9};
  params.age = {1, 2, 3, 4, 5};
  params.income = {-1, -2, -3};
  params.group = {0.5, -0.5};

  SocioDemographics d;
  d.gender = Gender::Male;
  d.age_band = AgeBand::From55To65;
  d.income_band = IncomeBand::Under50k;
  d.user_group = UserGroup::TrainUser;
  const auto e = embed(d, params);
  CHECK(e == EmbeddingVector{0.9, 4, -1, 0.5});

  // constant kernel: every profile maps to (1,1,1,1)
  EmbeddingParams ones;
  ones.gender.fill(1);
  ones.age.fill(1);
  ones.income.fill(1);
  ones.group.fill(1);
  for (const auto& profile : all_profiles()) {
    CHECK(embed(profile, ones) == EmbeddingVector{1, 1, 1, 1});
  }

  // locality: two profiles differing only in income differ only in component 2
  auto d2 = d;
  d2.income_band = IncomeBand::Over100k;
  const auto e2 = embed(d2, params);
  CHECK(e2[0] == e[0]);
  CHECK(e2[1] == e[1]);
  CHECK(e2[2] != e[2]);
  CHECK(e2[3] == e[3]);
}

TEST_CASE("cosine similarity basics") {
  CHECK(cosine_similarity({1, 0, 0, 0}, {0, 1, 0, 0}) == 0.0);
  CHECK(cosine_similarity({0.3, -2, 5, 1}, {0.3, -2, 5, 1}) == 1.0);
  CHECK(cosine_similarity({1, 1, 0, 0}, {1, 0, 0, 0}) ==
        Catch::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK_THROWS_AS(cosine_similarity({0, 0, 0, 0}, {1, 0, 0, 0}), EstimationError);
}

TEST_CASE("cosine similarity is scale invariant") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    EmbeddingVector a, b;
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    const double c = std::exp(rng.normal());
    EmbeddingVector ca;
    for (std::size_t i = 0; i < 4; ++i) ca[i] = c * a[i];
    CHECK(std::abs(cosine_similarity(ca, b) - cosine_similarity(a, b)) <= 1e-12);
  }
}

TEST_CASE("loading distribution: symmetry, lambda extremes, frozen logistic value") {
  // two personas at equal similarity from the query profile
  SocioDemographics query;
  query.gender = Gender::Female;
  auto p1 = query, p2 = query;
  p1.age_band = AgeBand::From25To39;
  p2.age_band = AgeBand::From40To54;
  EmbeddingParams params;
  params.gender = {1, 1};
  params.age = {1, 0.5, 0.5, 1, 1};  // both persona profiles see the same beta value
  params.income = {1, 1, 1};
  params.group = {1, 1};
  const auto basis = basis_of({p1, p2});
  const auto dist = loading_distribution(query, params, basis, kDefaultLambda);
  dist.validate();
  CHECK(dist.probabilities[0] == Catch::Approx(0.5).epsilon(1e-12));
  CHECK(dist.probabilities[1] == Catch::Approx(0.5).epsilon(1e-12));

  // lambda = 0 gives the uniform distribution
  const auto uniform = loading_distribution(query, random_params(3), basis, 0.0);
  CHECK(uniform.probabilities[0] == Catch::Approx(0.5).epsilon(1e-12));

  // similarities (1, 0) at lambda = 40/3: p1 = logistic(40/3)
  const auto two = softmax_distribution({1.0, 0.0}, kDefaultLambda);
  CHECK(two.probabilities[0] ==
        Catch::Approx(0.99999838040583077691).epsilon(1e-12));

  // softmax shift invariance
  const std::vector<double> sims{0.3, -0.2, 0.9, 0.1};
  const auto base = softmax_distribution(sims, kDefaultLambda);
  std::vector<double> shifted = sims;
  for (auto& s : shifted) s += 0.37;
  const auto moved = softmax_distribution(shifted, kDefaultLambda);
  for (std::size_t i = 0; i < sims.size(); ++i) {
    CHECK(std::abs(base.probabilities[i] - moved.probabilities[i]) <= 1e-12);
  }
}

TEST_CASE("sample_personas: exhaustion, point mass, determinism, sizing") {
  LoadingDistribution dist;
  dist.probabilities = {0.25, 0.25, 0.25, 0.25};
  auto all = sample_personas(dist, 4, 9);
  std::sort(all.begin(), all.end());
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3});

  LoadingDistribution point;
  point.probabilities = {0, 1, 0};
  CHECK(sample_personas(point, 1, 123) == std::vector<std::size_t>{1});

  LoadingDistribution skewed;
  skewed.probabilities = {0.7, 0.2, 0.1};
  CHECK(sample_personas(skewed, 2, 77) == sample_personas(skewed, 2, 77));
  CHECK_THROWS_AS(sample_personas(skewed, 4, 1), DataError);
  CHECK_THROWS_AS(sample_personas(skewed, 0, 1), DataError);
}

TEST_CASE("sample_personas single-draw frequencies match the distribution") {
  LoadingDistribution dist;
  dist.probabilities = {0.5, 0.3, 0.15, 0.05};
  const int n = 100000;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) {
    ++counts[sample_personas(dist, 1, 1000 + static_cast<std::uint64_t>(i)).front()];
  }
  for (std::size_t k = 0; k < 4; ++k) {
    const double p = dist.probabilities[k];
    const double se = std::sqrt(p * (1 - p) * n);
    CHECK(std::abs(counts[k] - p * n) <= 3 * se);
  }
}

TEST_CASE("similarity and loading conditions hold for random parameters") {
  const auto profiles = all_profiles();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto report = check_similarity_conditions(random_params(seed), profiles);
    INFO((report.violations.empty() ? "" : report.violations.front()));
    CHECK(report.passed);
  }
  CHECK_THROWS_AS(check_similarity_conditions(random_params(1), {}), DataError);
}

TEST_CASE("condition checkers flag injected violations") {
  ConditionReport report;
  check_normalization({0.5, 0.49}, report, "witness");  // sums to 0.99
  CHECK_FALSE(report.passed);
  CHECK_THAT(report.violations.front(), Catch::Matchers::ContainsSubstring("normalization"));

  ConditionReport mono;
  check_monotonicity({0.5, 0.5}, {0.6, 0.4}, mono, "witness");  // equal sims, unequal probs
  CHECK_FALSE(mono.passed);
  CHECK_THAT(mono.violations.front(), Catch::Matchers::ContainsSubstring("monotonicity"));
}

TEST_CASE("embedding params round-trip at full precision; degenerate saves rejected") {
  const auto params = random_params(42);
  const auto path = std::filesystem::temp_directory_path() / "params_roundtrip.json";
  save_params(path, params);
  const auto loaded = load_params(path);
  CHECK(loaded == params);  // bitwise equality via shortest round-trip serialization
  CHECK(params_digest(loaded) == params_digest(params));

  EmbeddingParams degenerate = params;
  degenerate.group = {0.0, 0.0};
  CHECK_THROWS_WITH(save_params(path, degenerate),
                    Catch::Matchers::ContainsSubstring("group"));
}
