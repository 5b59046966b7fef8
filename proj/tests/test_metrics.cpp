#include <catch2/catch_amalgamated.hpp>

#include "palign/metrics.hpp"
#include "palign/synth.hpp"

using namespace palign;

namespace {

ShareVector share(double a, double b, double c) {
  ShareVector s;
  s.p = {a, b, c};
  return s;
}

PredictionSet set_from(const std::vector<Alternative>& preds, std::string method = "m") {
  PredictionSet set;
  set.manifest.method = std::move(method);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    PredictionEntry e;
    e.record_index = i;
    e.record_id = "r" + std::to_string(i);
    e.predicted = preds[i];
    set.entries.push_back(e);
  }
  return set;
}

std::vector<ChoiceRecord> truth_records(const std::vector<Alternative>& truths) {
  std::vector<ChoiceRecord> out;
  Rng rng(2);
  for (auto t : truths) {
    ChoiceRecord r;
    r.demographics = random_demographics(rng);
    r.context = random_context(rng);
    r.chosen = t;
    out.push_back(r);
  }
  return out;
}

constexpr auto T = Alternative::Train;
constexpr auto S = Alternative::Swissmetro;
constexpr auto C = Alternative::Car;

}  // namespace

TEST_CASE("shares: empirical frequencies") {
  const auto s = shares({C, C, C});
  CHECK(s.p == std::array<double, 3>{0, 0, 1});
  const auto m = shares({T, S, S, C});
  CHECK(m.p[0] == Catch::Approx(0.25));
  CHECK(m.p[1] == Catch::Approx(0.5));
  CHECK(m.p[0] + m.p[1] + m.p[2] == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(shares({}), DataError);
}

TEST_CASE("js divergence: identity, symmetry, frozen value") {
  const auto truth = share(0.06, 0.533, 0.407);
  const auto mnl = share(0.02, 0.775, 0.205);
  CHECK(js_divergence(truth, truth) == 0.0);
  // direct evaluation of the printed formula with 1e-6 smoothing
  CHECK(js_divergence(truth, mnl) ==
        Catch::Approx(0.13653231218386813).epsilon(1e-9));
  CHECK(js_divergence(truth, mnl) == Catch::Approx(js_divergence(mnl, truth)).margin(1e-12));

  // non-negativity and identity of indiscernibles over random share pairs
  Rng rng(44);
  auto random_share = [&] {
    std::array<double, 3> v{rng.uniform01() + 1e-3, rng.uniform01() + 1e-3,
                            rng.uniform01() + 1e-3};
    const double total = v[0] + v[1] + v[2];
    for (auto& x : v) x /= total;
    ShareVector s;
    s.p = v;
    return s;
  };
  for (int i = 0; i < 1000; ++i) {
    const auto p = random_share();
    const auto q = random_share();
    const double d = js_divergence(p, q);
    CHECK(d >= 0.0);
    CHECK(js_divergence(p, p) == 0.0);
    if (d == 0.0) CHECK(p.p == q.p);
  }

  // zero-share bins stay finite thanks to smoothing
  CHECK(std::isfinite(js_divergence(share(0, 0, 1), share(1, 0, 0))));
}

TEST_CASE("f1 scores: perfect, cyclic, frozen 6-record case") {
  const std::vector<Alternative> perfect = {T, S, C, S, C, S};
  CHECK(f1_scores(perfect, perfect, F1Weighting::Macro) == 1.0);
  CHECK(f1_scores(perfect, perfect, F1Weighting::WeightedByPredicted) ==
        Catch::Approx(1.0).margin(1e-12));

  // every prediction lands on a wrong class: zero precision and recall everywhere
  const std::vector<Alternative> truths3 = {T, S, C};
  const std::vector<Alternative> cycled = {S, C, T};
  CHECK(f1_scores(truths3, cycled, F1Weighting::Macro) == 0.0);

  // 6-record hand case: one Car record predicted as Swissmetro
  const std::vector<Alternative> t6 = {T, S, C, S, C, S};
  const std::vector<Alternative> y6 = {T, S, C, S, S, S};
  CHECK(f1_scores(t6, y6, F1Weighting::Macro) ==
        Catch::Approx(53.0 / 63.0).epsilon(1e-12));
  CHECK(f1_scores(t6, y6, F1Weighting::WeightedByPredicted) ==
        Catch::Approx(107.0 / 126.0).epsilon(1e-12));
  CHECK(f1_scores(t6, y6, F1Weighting::WeightedByTrue) ==
        Catch::Approx(103.0 / 126.0).epsilon(1e-12));

  CHECK_THROWS_AS(f1_scores(t6, truths3), DataError);
}

TEST_CASE("macro f1 is invariant to joint label permutation") {
  Rng rng(5);
  std::vector<Alternative> t, y;
  for (int i = 0; i < 200; ++i) {
    t.push_back(static_cast<Alternative>(rng.below(3)));
    y.push_back(static_cast<Alternative>(rng.below(3)));
  }
  const double base = f1_scores(t, y, F1Weighting::Macro);
  auto permute = [](Alternative a) {  // T->S->C->T
    return static_cast<Alternative>((static_cast<int>(a) + 1) % 3);
  };
  std::vector<Alternative> tp, yp;
  for (std::size_t i = 0; i < t.size(); ++i) {
    tp.push_back(permute(t[i]));
    yp.push_back(permute(y[i]));
  }
  CHECK(f1_scores(tp, yp, F1Weighting::Macro) == Catch::Approx(base).epsilon(1e-12));
}

TEST_CASE("confusion matrix: diagonal, totals, transpose, accuracy bound") {
  const std::vector<Alternative> t = {T, S, C, S, C, S, T};
  const std::vector<Alternative> y = {T, S, C, S, S, S, C};
  const auto m = confusion_matrix(t, y);
  std::size_t total = 0, diag = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) total += m[i][j];
    diag += m[i][i];
  }
  CHECK(total == t.size());

  const auto transposed = confusion_matrix(y, t);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) CHECK(m[i][j] == transposed[j][i]);
  }

  const auto perfect = confusion_matrix(t, t);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) CHECK(perfect[i][j] == 0);
    }
  }
  // accuracy 1 <=> F1 1
  CHECK(f1_scores(t, t, F1Weighting::Macro) == 1.0);
  CHECK(diag < total);  // this case is imperfect
  CHECK(f1_scores(t, y, F1Weighting::Macro) < 1.0);
}

TEST_CASE("comparison report: perfect method, ordering, machine/text agreement") {
  const std::vector<Alternative> truths = {T, S, C, S, C, S, T, C};
  const auto records = truth_records(truths);
  auto perfect = set_from(truths, "perfect");
  auto constant = set_from(std::vector<Alternative>(truths.size(), S), "always-sm");

  const auto report = comparison_report({{"perfect", perfect}, {"always-sm", constant}},
                                        records);
  REQUIRE(report.methods.size() == 2);
  CHECK(report.methods[0].method == "perfect");  // input order preserved
  CHECK(report.methods[1].method == "always-sm");
  CHECK(report.methods[0].divergence == 0.0);
  CHECK(report.methods[0].macro_f1 == 1.0);
  CHECK(report.methods[0].weighted_f1 == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.methods[1].divergence > 0.0);

  const auto j = to_json(report);
  CHECK(j.at("methods").size() == 2);
  CHECK(j.at("methods").at(0).at("macro_f1").get<double>() == 1.0);
  const auto table = render_comparison_table(report);
  CHECK(table.find("perfect") != std::string::npos);
  CHECK(table.find("always-sm") != std::string::npos);

  // mismatched test sets are rejected
  auto short_set = set_from({T, S});
  CHECK_THROWS_AS(comparison_report({{"bad", short_set}}, records), DataError);
}

TEST_CASE("evaluation excludes failed records and counts them") {
  const std::vector<Alternative> truths = {T, S, C, S};
  const auto records = truth_records(truths);
  auto set = set_from(truths);
  set.entries[2].failed = true;
  const auto report = evaluate_predictions(set, records);
  CHECK(report.failed_records == 1);
  CHECK(report.evaluated_records == 3);
  // remaining predictions are perfect, but class Car is now absent (0/0 -> 0)
  CHECK(report.macro_f1 == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(report.weighted_f1 == Catch::Approx(1.0).margin(1e-12));
}
