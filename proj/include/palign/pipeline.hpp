#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "palign/baselines.hpp"
#include "palign/dataset.hpp"
#include "palign/inference.hpp"
#include "palign/interpret.hpp"
#include "palign/manifest.hpp"
#include "palign/metrics.hpp"
#include "palign/oracle.hpp"
#include "palign/predictor.hpp"
#include "palign/synth.hpp"
#include "palign/trainer.hpp"

namespace palign {

namespace fs_ = std::filesystem;

// ---------------------------------------------------------------------------
// Oracle construction shared by the CLI and the acceptance pipeline

struct OracleSpec {
  std::string kind = "synthetic";  // "synthetic" | "http"
  SyntheticOracleParams synthetic;
  OracleConfig http;
  std::optional<fs_::path> cache_path;
  bool replay_only = false;

  json to_json() const {
    json j{{"kind", kind}, {"replay_only", replay_only}};
    if (kind == "synthetic") {
      j["synthetic"] = synthetic.to_json();
    } else {
      j["endpoint"] = http.endpoint_url;
      j["model"] = http.model_name;
      j["temperature"] = http.temperature;
      j["max_retries"] = http.max_retries;
      j["max_parallel_requests"] = http.max_parallel_requests;
      j["api_key_env"] = http.api_key_env;  // the name only, never the value
    }
    if (cache_path) j["cache"] = cache_path->string();
    return j;
  }
};

struct BuiltOracle {
  std::shared_ptr<ChoiceOracle> oracle;          // outermost (possibly cached)
  std::shared_ptr<ChoiceOracle> inner;           // network/synthetic layer
  std::shared_ptr<CachedOracle> cache;           // null when uncached
  int max_parallel = 1;

  std::size_t upstream_calls() const { return inner ? inner->calls() : 0; }
  std::size_t cache_hits() const { return cache ? cache->hits() : 0; }
};

inline BuiltOracle build_oracle(const OracleSpec& spec) {
  BuiltOracle built;
  if (spec.kind == "synthetic") {
    built.inner = std::make_shared<SyntheticOracle>(spec.synthetic);
    built.max_parallel = 4;
  } else if (spec.kind == "http") {
    spec.http.validate();
    built.inner = std::make_shared<HttpOracle>(spec.http);
    built.max_parallel = spec.http.max_parallel_requests;
  } else {
    throw ConfigError("unknown oracle kind: " + spec.kind);
  }
  built.oracle = built.inner;
  if (spec.cache_path) {
    built.cache = std::make_shared<CachedOracle>(built.inner, *spec.cache_path,
                                                 spec.replay_only);
    built.oracle = built.cache;
  }
  return built;
}

namespace detail {

inline RunManifest start_manifest(std::string command, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.seed = seed;
  m.prompt_version = std::string(kPromptVersion);
  m.started_at = utc_timestamp();
  return m;
}

inline void finish_manifest(RunManifest& m, const fs_::path& dir,
                            const BuiltOracle* oracle = nullptr) {
  if (oracle) {
    m.oracle_identity = oracle->oracle ? oracle->oracle->identity() : "";
    m.oracle_calls = oracle->upstream_calls();
    m.cache_hits = oracle->cache_hits();
  }
  m.finished_at = utc_timestamp();
  fs_::create_directories(dir);
  write_manifest(dir, m);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stages

struct IngestResult {
  std::size_t raw_rows = 0;
  std::size_t respondents = 0;
  std::size_t records = 0;
  fs_::path panels_path;
};

inline IngestResult run_ingest(const fs_::path& input, const fs_::path& outdir) {
  auto manifest = detail::start_manifest("ingest", 0);
  manifest.input_checksums[input.string()] = file_sha256(input);
  manifest.resolved_config = json{{"input", input.string()},
                                  {"filter_rule", filter_rule_description()}};

  const auto rows = parse_swissmetro(input);
  const auto panels = filter_records(rows);
  IngestResult result;
  result.raw_rows = rows.size();
  result.respondents = panels.size();
  for (const auto& p : panels) result.records += p.observations.size();

  fs_::create_directories(outdir);
  result.panels_path = outdir / "panels.jsonl";
  save_panels(result.panels_path, panels);

  manifest.extra = json{{"raw_rows", result.raw_rows},
                        {"respondents", result.respondents},
                        {"records", result.records}};
  detail::finish_manifest(manifest, outdir);
  return result;
}

inline DatasetBundle run_split(const fs_::path& panels_or_dat, std::uint64_t seed,
                               const SplitSizes& sizes, const fs_::path& outdir) {
  auto manifest = detail::start_manifest("split", seed);
  manifest.input_checksums[panels_or_dat.string()] = file_sha256(panels_or_dat);
  manifest.resolved_config =
      json{{"input", panels_or_dat.string()},
           {"n_detailed_respondents", sizes.n_detailed_respondents},
           {"n_general_records", sizes.n_general_records},
           {"n_test_records", sizes.n_test_records},
           {"filter_rule", filter_rule_description()}};

  std::vector<RespondentPanel> panels;
  if (panels_or_dat.extension() == ".jsonl") {
    panels = load_panels(panels_or_dat);
  } else {
    panels = filter_records(parse_swissmetro(panels_or_dat));
  }
  const auto bundle = split_datasets(panels, seed, sizes);
  save_bundle(outdir, bundle);

  json summaries = json::array();
  for (const auto& s : summarize_dataset(bundle)) {
    json vars = json::array();
    for (const auto& v : s.demographics) {
      json shares_json = json::object();
      for (const auto& share : v.shares) shares_json[share.category] = share.percent;
      vars.push_back(json{{"variable", v.variable}, {"percent", shares_json}});
    }
    json choice_shares = json::object();
    for (const auto& share : s.choices.shares) choice_shares[share.category] = share.percent;
    summaries.push_back(json{{"dataset", s.name},
                             {"units", s.units},
                             {"demographics", vars},
                             {"choice_percent", choice_shares}});
  }
  write_file(outdir / "summary.json", summaries.dump(2) + "\n");
  manifest.extra = json{{"detailed_panels", bundle.detailed.size()},
                        {"general_records", bundle.general.size()},
                        {"test_records", bundle.test.size()}};
  detail::finish_manifest(manifest, outdir);
  return bundle;
}

struct SynthSpec {
  std::string scenario = "recoverability";  // "recoverability" | "mnl"
  RecoverabilityConfig recoverability;
  std::size_t mnl_train_records = 2000;
  std::size_t mnl_test_records = 500;
  std::uint64_t seed = 0;
};

inline DatasetBundle run_synth(const SynthSpec& spec, const OracleSpec& oracle_spec,
                               const fs_::path& outdir) {
  auto manifest = detail::start_manifest("synth", spec.seed);
  DatasetBundle bundle;
  auto built = build_oracle(oracle_spec);
  if (spec.scenario == "recoverability") {
    auto config = spec.recoverability;
    config.seed = spec.seed;
    bundle = synth_recoverability_bundle(config, *built.oracle);
    manifest.resolved_config = json{{"scenario", spec.scenario},
                                    {"n_detailed", config.n_detailed},
                                    {"n_general", config.n_general},
                                    {"n_test", config.n_test},
                                    {"oracle", oracle_spec.to_json()}};
  } else if (spec.scenario == "mnl") {
    MnlParams truth;
    truth.asc_train = -0.8;
    truth.asc_swissmetro = 0.5;
    truth.beta_time = -0.01;
    truth.beta_cost = -0.011;
    truth.beta_headway = -0.008;
    truth.ga_zeroes_rail_cost = false;
    bundle.split_seed = spec.seed;
    bundle.general = synth_mnl_records(spec.mnl_train_records, spec.seed, truth);
    bundle.test = synth_mnl_records(spec.mnl_test_records, spec.seed + 1, truth);
    manifest.resolved_config =
        json{{"scenario", spec.scenario},
             {"train_records", spec.mnl_train_records},
             {"test_records", spec.mnl_test_records},
             {"truth",
              json{{"asc_train", truth.asc_train},
                   {"asc_swissmetro", truth.asc_swissmetro},
                   {"beta_time", truth.beta_time},
                   {"beta_cost", truth.beta_cost},
                   {"beta_headway", truth.beta_headway}}}};
  } else {
    throw ConfigError("unknown synth scenario: " + spec.scenario);
  }
  save_bundle(outdir, bundle);
  manifest.extra = json{{"detailed_panels", bundle.detailed.size()},
                        {"general_records", bundle.general.size()},
                        {"test_records", bundle.test.size()}};
  detail::finish_manifest(manifest, outdir, &built);
  return bundle;
}

inline InferenceResult run_infer_personas(const fs_::path& bundle_dir,
                                          const OracleSpec& oracle_spec,
                                          const fs_::path& outdir) {
  auto manifest = detail::start_manifest("infer-personas", 0);
  manifest.input_checksums[(bundle_dir / "detailed.jsonl").string()] =
      file_sha256(bundle_dir / "detailed.jsonl");
  manifest.resolved_config =
      json{{"bundle", bundle_dir.string()}, {"oracle", oracle_spec.to_json()}};

  const auto panels = load_panels(bundle_dir / "detailed.jsonl");
  auto built = build_oracle(oracle_spec);
  auto result = infer_personas(panels, *built.oracle, built.max_parallel);

  fs_::create_directories(outdir);
  save_basis(outdir / "personas.jsonl", result.basis);
  manifest.extra = json{{"personas", result.basis.size()},
                        {"failed_ids", result.failed_ids}};
  detail::finish_manifest(manifest, outdir, &built);
  return result;
}

inline json train_config_json(const TrainConfig& c) {
  return json{{"L0", c.L0},
              {"max_iterations", c.max_iterations},
              {"convergence_tol", c.convergence_tol},
              {"alpha_e", c.alpha_e},
              {"alpha_m", c.alpha_m},
              {"lambda", c.lambda},
              {"learning_rate", c.m_step.learning_rate},
              {"m_step_iterations", c.m_step.iterations},
              {"seed", c.seed},
              {"compute_exact_ll", c.compute_exact_ll}};
}

inline TrainResult run_train(const fs_::path& bundle_dir, const fs_::path& basis_path,
                             const OracleSpec& oracle_spec, const TrainConfig& config,
                             const fs_::path& outdir, bool resume = false) {
  auto manifest = detail::start_manifest("train", config.seed);
  manifest.input_checksums[basis_path.string()] = file_sha256(basis_path);
  manifest.input_checksums[(bundle_dir / "general.jsonl").string()] =
      file_sha256(bundle_dir / "general.jsonl");
  manifest.resolved_config = json{{"bundle", bundle_dir.string()},
                                  {"basis", basis_path.string()},
                                  {"oracle", oracle_spec.to_json()},
                                  {"train", train_config_json(config)}};

  const auto bundle = load_bundle(bundle_dir);
  const auto basis = load_basis(basis_path);
  auto built = build_oracle(oracle_spec);

  std::optional<EmbeddingParams> warm;
  int start_iteration = 0;
  const fs_::path checkpoint_path = outdir / "checkpoint.json";
  if (resume && fs_::exists(checkpoint_path)) {
    const auto cp = json::parse(read_file(checkpoint_path));
    warm = params_from_json(cp.at("params"));
    start_iteration = cp.at("iteration").get<int>();
  }

  auto result = train(bundle, basis, *built.oracle, config, warm ? &*warm : nullptr,
                      start_iteration);

  fs_::create_directories(outdir);
  save_params(outdir / "params.json", result.params);
  std::vector<json> history;
  for (const auto& it : result.history) {
    json row{{"t", it.t},
             {"L", it.L},
             {"simulated_ll", it.simulated_ll},
             {"zero_likelihood_records", it.zero_likelihood_records},
             {"delta_beta_inf", it.delta_beta_inf},
             {"m_objective", it.m_objective},
             {"oracle_calls", it.oracle_calls_cumulative},
             {"stalled", it.stalled}};
    row["exact_ll"] = it.exact_ll ? json(*it.exact_ll) : json(nullptr);
    history.push_back(row);
  }
  write_jsonl(outdir / "history.jsonl", history);
  const int last_iteration = result.history.empty() ? start_iteration
                                                    : result.history.back().t;
  write_file(checkpoint_path, json{{"kind", "train_checkpoint"},
                                   {"iteration", last_iteration},
                                   {"params", to_json(result.params)},
                                   {"seed", config.seed}}
                                  .dump(2) +
                                  "\n");
  manifest.extra = json{{"iterations", result.history.size()},
                        {"converged", result.converged},
                        {"params_digest", params_digest(result.params)}};
  detail::finish_manifest(manifest, outdir, &built);
  return result;
}

inline PredictionSet run_predict(const fs_::path& bundle_dir, const fs_::path& basis_path,
                                 const fs_::path& params_path,
                                 const OracleSpec& oracle_spec,
                                 const PredictionConfig& config, double lambda,
                                 const fs_::path& outdir) {
  auto manifest = detail::start_manifest("predict", config.seed);
  for (const auto& p : {basis_path, params_path, bundle_dir / "test.jsonl"}) {
    manifest.input_checksums[p.string()] = file_sha256(p);
  }
  manifest.resolved_config =
      json{{"bundle", bundle_dir.string()},
           {"basis", basis_path.string()},
           {"params", params_path.string()},
           {"oracle", oracle_spec.to_json()},
           {"repeats", config.repeats},
           {"aggregation",
            config.aggregation == Aggregation::MajorityVote ? "majority_vote"
                                                            : "single_draw"},
           {"lambda", lambda}};

  const auto test = load_records(bundle_dir / "test.jsonl");
  const auto basis = load_basis(basis_path);
  const auto params = load_params(params_path);
  auto built = build_oracle(oracle_spec);
  auto run_config = config;
  run_config.max_parallel = built.max_parallel;
  auto set = predict(test, params, basis, *built.oracle, run_config, lambda);

  fs_::create_directories(outdir);
  save_prediction_set(outdir / "predictions.jsonl", set);
  manifest.extra = json{{"predictions", set.entries.size()},
                        {"failed", set.failed_count()}};
  detail::finish_manifest(manifest, outdir, &built);
  return set;
}

// Baselines emit PredictionSets compatible with the evaluation module.

inline PredictionSet baseline_prediction_set(std::string method, std::string oracle_id,
                                             std::uint64_t seed) {
  PredictionSet set;
  set.manifest.method = std::move(method);
  set.manifest.oracle_identity = std::move(oracle_id);
  set.manifest.prompt_version = std::string(kPromptVersion);
  set.manifest.seed = seed;
  return set;
}

inline PredictionSet run_baseline_mnl(const fs_::path& bundle_dir, bool ga_zeroes_rail_cost,
                                      const fs_::path& outdir) {
  auto manifest = detail::start_manifest("baseline mnl", 0);
  manifest.resolved_config = json{{"bundle", bundle_dir.string()},
                                  {"ga_zeroes_rail_cost", ga_zeroes_rail_cost}};
  const auto bundle = load_bundle(bundle_dir);
  // training data: the flattened detailed panels plus the general records
  auto training = flatten(bundle.detailed);
  training.insert(training.end(), bundle.general.begin(), bundle.general.end());
  const auto params = mnl_fit(training, ga_zeroes_rail_cost);

  auto set = baseline_prediction_set("mnl", "mnl", 0);
  for (std::size_t i = 0; i < bundle.test.size(); ++i) {
    PredictionEntry e;
    e.record_index = i;
    e.record_id = bundle.test[i].respondent_id + "#" + std::to_string(i);
    e.predicted = mnl_predict(params, bundle.test[i]).argmax;
    set.entries.push_back(std::move(e));
  }

  fs_::create_directories(outdir);
  save_prediction_set(outdir / "predictions.jsonl", set);
  const auto theta = params.flat();
  write_file(outdir / "mnl_params.json",
             json{{"kind", "mnl_params"},
                  {"asc_train", theta[0]},
                  {"asc_swissmetro", theta[1]},
                  {"beta_time", theta[2]},
                  {"beta_cost", theta[3]},
                  {"beta_headway", theta[4]},
                  {"std_errors", params.std_errors},
                  {"log_likelihood", params.final_log_likelihood},
                  {"iterations", params.iterations},
                  {"ga_zeroes_rail_cost", params.ga_zeroes_rail_cost},
                  {"training_records", training.size()}}
                 .dump(2) +
                 "\n");
  manifest.extra = json{{"training_records", training.size()},
                        {"log_likelihood", params.final_log_likelihood}};
  detail::finish_manifest(manifest, outdir);
  return set;
}

struct PromptBaselineSpec {
  std::string kind;  // "zero-shot" | "few-shot" | "same-group"
  FewShotConfig few_shot;
  std::optional<fs_::path> basis_path;  // same-group only
  std::uint64_t seed = 0;
};

inline PredictionSet run_baseline_prompting(const fs_::path& bundle_dir,
                                            const PromptBaselineSpec& spec,
                                            const OracleSpec& oracle_spec,
                                            const fs_::path& outdir) {
  auto manifest = detail::start_manifest("baseline " + spec.kind, spec.seed);
  manifest.resolved_config = json{{"bundle", bundle_dir.string()},
                                  {"oracle", oracle_spec.to_json()}};
  const auto bundle = load_bundle(bundle_dir);
  auto built = build_oracle(oracle_spec);

  PersonaBasis basis;
  if (spec.kind == "same-group") {
    if (!spec.basis_path) throw ConfigError("same-group baseline requires --basis");
    basis = load_basis(*spec.basis_path);
    manifest.input_checksums[spec.basis_path->string()] = file_sha256(*spec.basis_path);
  }
  std::vector<ChoiceRecord> pool;
  if (spec.kind == "few-shot") {
    pool = flatten(bundle.detailed);
    pool.insert(pool.end(), bundle.general.begin(), bundle.general.end());
    manifest.resolved_config["n_examples"] = spec.few_shot.n_examples;
  }

  auto set = baseline_prediction_set(spec.kind, built.oracle->identity(), spec.seed);
  set.entries.resize(bundle.test.size());
  parallel_for(bundle.test.size(), built.max_parallel, [&](std::size_t i) {
    const auto& rec = bundle.test[i];
    PredictionEntry e;
    e.record_index = i;
    e.record_id = rec.respondent_id + "#" + std::to_string(i);
    try {
      if (spec.kind == "zero-shot") {
        e.predicted = zero_shot_predict(rec, *built.oracle);
      } else if (spec.kind == "few-shot") {
        e.predicted = few_shot_predict(rec, pool, spec.few_shot, *built.oracle);
      } else if (spec.kind == "same-group") {
        e.predicted =
            same_group_predict(rec, basis, *built.oracle, derive_seed(spec.seed, i));
      } else {
        throw ConfigError("unknown prompting baseline: " + spec.kind);
      }
    } catch (const OracleError&) {
      e.failed = true;
    }
    set.entries[i] = std::move(e);
  });

  fs_::create_directories(outdir);
  save_prediction_set(outdir / "predictions.jsonl", set);
  manifest.extra = json{{"predictions", set.entries.size()},
                        {"failed", set.failed_count()}};
  detail::finish_manifest(manifest, outdir, &built);
  return set;
}

inline MetricsReport run_evaluate(const fs_::path& predictions_path,
                                  const fs_::path& bundle_dir, const fs_::path& outdir) {
  auto manifest = detail::start_manifest("evaluate", 0);
  manifest.input_checksums[predictions_path.string()] = file_sha256(predictions_path);
  const auto set = load_prediction_set(predictions_path);
  const auto test = load_records(bundle_dir / "test.jsonl");
  const auto report = evaluate_predictions(set, test);

  fs_::create_directories(outdir);
  write_file(outdir / "metrics.json", to_json(report).dump(2) + "\n");
  ComparisonReport comparison;
  comparison.truth_shares = report.truth_shares;
  comparison.methods = {report};
  write_file(outdir / "metrics.txt", render_comparison_table(comparison));
  manifest.extra = json{{"method", report.method},
                        {"jsd", report.divergence},
                        {"macro_f1", report.macro_f1},
                        {"weighted_f1", report.weighted_f1}};
  detail::finish_manifest(manifest, outdir);
  return report;
}

inline ComparisonReport run_compare(
    const std::vector<std::pair<std::string, fs_::path>>& named_paths,
    const fs_::path& bundle_dir, const fs_::path& outdir) {
  auto manifest = detail::start_manifest("compare", 0);
  std::vector<std::pair<std::string, PredictionSet>> sets;
  for (const auto& [name, path] : named_paths) {
    manifest.input_checksums[path.string()] = file_sha256(path);
    sets.emplace_back(name, load_prediction_set(path));
  }
  const auto test = load_records(bundle_dir / "test.jsonl");
  const auto report = comparison_report(sets, test);

  fs_::create_directories(outdir);
  write_file(outdir / "report.json", to_json(report).dump(2) + "\n");
  write_file(outdir / "report.txt", render_comparison_table(report));

  // plot-data file: shares per method plus confusion matrices
  json plot{{"kind", "plot_data"},
            {"alternatives", json::array({"train", "swissmetro", "car"})},
            {"truth_shares", report.truth_shares.p}};
  json methods = json::array();
  for (const auto& m : report.methods) {
    json cm = json::array();
    for (const auto& row : m.confusion) cm.push_back(row);
    methods.push_back(json{{"name", m.method},
                           {"shares", m.predicted_shares.p},
                           {"confusion_matrix", cm}});
  }
  plot["methods"] = methods;
  write_file(outdir / "plotdata.json", plot.dump(2) + "\n");

  json summary = json::array();
  for (const auto& m : report.methods) {
    summary.push_back(json{{"method", m.method},
                           {"jsd", m.divergence},
                           {"macro_f1", m.macro_f1},
                           {"weighted_f1", m.weighted_f1}});
  }
  manifest.extra = json{{"methods", summary}};
  detail::finish_manifest(manifest, outdir);
  return report;
}

struct InterpretSpec {
  int k = 6;
  int restarts = 8;
  std::uint64_t seed = 0;
  std::optional<std::pair<int, int>> sweep;  // inclusive k range
};

inline ClusterAssignment run_interpret(const fs_::path& params_path,
                                       const fs_::path& bundle_dir,
                                       const InterpretSpec& spec, const fs_::path& outdir) {
  auto manifest = detail::start_manifest("interpret", spec.seed);
  manifest.input_checksums[params_path.string()] = file_sha256(params_path);
  manifest.resolved_config =
      json{{"params", params_path.string()}, {"k", spec.k}, {"restarts", spec.restarts}};

  const auto params = load_params(params_path);
  const auto bundle = load_bundle(bundle_dir);
  std::vector<SocioDemographics> observed;
  for (const auto& p : bundle.detailed) observed.push_back(p.demographics);
  for (const auto& r : bundle.general) observed.push_back(r.demographics);
  for (const auto& r : bundle.test) observed.push_back(r.demographics);
  const auto table = profile_table(observed, params);

  fs_::create_directories(outdir);
  write_file(outdir / "params_table.json",
             params_table_json(export_params(params)).dump(2) + "\n");

  const auto clusters = cluster_profiles(table, spec.k, spec.seed, spec.restarts);
  write_file(outdir / "clusters.json", clusters_json(table, clusters).dump(2) + "\n");

  if (spec.sweep) {
    json sweep_rows = json::array();
    for (int k = spec.sweep->first; k <= spec.sweep->second; ++k) {
      if (static_cast<std::size_t>(k) > table.size()) break;
      const auto ca = cluster_profiles(table, k, spec.seed, spec.restarts);
      sweep_rows.push_back(json{{"k", k},
                                {"inertia", ca.inertia},
                                {"silhouette", silhouette_score(table, ca.cluster_of, k)}});
    }
    write_file(outdir / "k_sweep.json",
               json{{"kind", "k_sweep"}, {"rows", sweep_rows}}.dump(2) + "\n");
  }
  manifest.extra = json{{"profiles", table.size()},
                        {"k", spec.k},
                        {"inertia", clusters.inertia}};
  detail::finish_manifest(manifest, outdir);
  return clusters;
}

// Top-10 personas by loading probability for one profile (inspection surface).
inline std::string dump_loading(const EmbeddingParams& params, const PersonaBasis& basis,
                                const SocioDemographics& profile, double lambda) {
  const auto dist = loading_distribution(profile, params, basis, lambda);
  std::vector<std::size_t> order(dist.probabilities.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dist.probabilities[a] > dist.probabilities[b];
  });
  std::string out = "persona                 probability  source profile\n";
  char buf[160];
  for (std::size_t rank = 0; rank < std::min<std::size_t>(10, order.size()); ++rank) {
    const auto k = order[rank];
    const auto& persona = basis.personas[k];
    const auto& d = basis.demographics_of(k);
    std::snprintf(buf, sizeof(buf), "%-22s %12.6f  %s/%s/%s/%s\n",
                  persona.source_respondent_id.c_str(), dist.probabilities[k],
                  std::string(to_string(d.gender)).c_str(),
                  std::string(to_string(d.age_band)).c_str(),
                  std::string(to_string(d.income_band)).c_str(),
                  std::string(to_string(d.user_group)).c_str());
    out += buf;
  }
  return out;
}

}  // namespace palign
