#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "palign/pipeline.hpp"

using namespace palign;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SynthSpec small_synth(std::uint64_t seed) {
  SynthSpec spec;
  spec.scenario = "recoverability";
  spec.recoverability.n_detailed = 10;
  spec.recoverability.n_general = 30;
  spec.recoverability.n_test = 12;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("pipeline stages produce outputs and manifests end to end") {
  const auto root = fresh_dir("pipe_e2e");
  OracleSpec oracle;  // synthetic, no cache

  const auto bundle = run_synth(small_synth(3), oracle, root / "bundle");
  CHECK(fs::exists(root / "bundle" / "manifest.json"));
  CHECK(fs::exists(root / "bundle" / "detailed.jsonl"));
  CHECK(bundle.general.size() == 30);

  const auto inference = run_infer_personas(root / "bundle", oracle, root / "personas");
  CHECK(inference.basis.size() == 10);
  CHECK(fs::exists(root / "personas" / "manifest.json"));

  TrainConfig config;
  config.L0 = 2;
  config.max_iterations = 3;
  config.convergence_tol = 1e-9;
  config.seed = 7;
  const auto trained = run_train(root / "bundle", root / "personas" / "personas.jsonl",
                                 oracle, config, root / "train");
  CHECK(fs::exists(root / "train" / "params.json"));
  CHECK(fs::exists(root / "train" / "history.jsonl"));
  CHECK(fs::exists(root / "train" / "checkpoint.json"));
  CHECK(trained.history.size() == 3);

  PredictionConfig pconfig;
  pconfig.seed = 11;
  const auto predictions =
      run_predict(root / "bundle", root / "personas" / "personas.jsonl",
                  root / "train" / "params.json", oracle, pconfig, kDefaultLambda,
                  root / "predict");
  CHECK(predictions.entries.size() == 12);
  CHECK(predictions.failed_count() == 0);

  const auto mnl = run_baseline_mnl(root / "bundle", false, root / "baseline-mnl");
  CHECK(mnl.entries.size() == 12);

  PromptBaselineSpec zs;
  zs.kind = "zero-shot";
  const auto zero =
      run_baseline_prompting(root / "bundle", zs, oracle, root / "baseline-zero");
  CHECK(zero.entries.size() == 12);

  PromptBaselineSpec fs_spec;
  fs_spec.kind = "few-shot";
  fs_spec.few_shot.n_examples = 3;
  const auto few =
      run_baseline_prompting(root / "bundle", fs_spec, oracle, root / "baseline-few");
  CHECK(few.entries.size() == 12);

  PromptBaselineSpec sg;
  sg.kind = "same-group";
  sg.basis_path = root / "personas" / "personas.jsonl";
  sg.seed = 5;
  const auto same =
      run_baseline_prompting(root / "bundle", sg, oracle, root / "baseline-same");
  CHECK(same.entries.size() == 12);

  const auto metrics = run_evaluate(root / "predict" / "predictions.jsonl",
                                    root / "bundle", root / "evaluate");
  CHECK(metrics.evaluated_records == 12);

  const auto report = run_compare(
      {{"ours", root / "predict" / "predictions.jsonl"},
       {"mnl", root / "baseline-mnl" / "predictions.jsonl"},
       {"zero-shot", root / "baseline-zero" / "predictions.jsonl"},
       {"few-shot", root / "baseline-few" / "predictions.jsonl"},
       {"same-group", root / "baseline-same" / "predictions.jsonl"}},
      root / "bundle", root / "compare");
  CHECK(report.methods.size() == 5);
  CHECK(fs::exists(root / "compare" / "report.txt"));
  CHECK(fs::exists(root / "compare" / "plotdata.json"));

  InterpretSpec ispec;
  ispec.k = 3;
  ispec.seed = 2;
  ispec.sweep = {{2, 4}};
  const auto clusters = run_interpret(root / "train" / "params.json", root / "bundle",
                                      ispec, root / "interpret");
  CHECK(clusters.k == 3);
  CHECK(fs::exists(root / "interpret" / "params_table.json"));
  CHECK(fs::exists(root / "interpret" / "clusters.json"));
  CHECK(fs::exists(root / "interpret" / "k_sweep.json"));

  // every stage directory carries exactly one manifest with verified checksums
  for (const auto& stage :
       {"bundle", "personas", "train", "predict", "baseline-mnl", "evaluate", "compare",
        "interpret"}) {
    const auto manifest = json::parse(read_file(root / stage / "manifest.json"));
    CHECK(manifest.at("kind") == "run_manifest");
    CHECK(manifest.at("tool_version") == std::string(kToolVersion));
    for (const auto& [path, digest] :
         manifest.at("input_checksums").get<std::map<std::string, std::string>>()) {
      CHECK(file_sha256(path) == digest);
    }
  }
}

TEST_CASE("training resumes from checkpoints") {
  const auto root = fresh_dir("pipe_resume");
  OracleSpec oracle;
  run_synth(small_synth(5), oracle, root / "bundle");
  run_infer_personas(root / "bundle", oracle, root / "personas");

  TrainConfig config;
  config.L0 = 2;
  config.max_iterations = 2;
  config.convergence_tol = 1e-12;
  config.seed = 3;
  run_train(root / "bundle", root / "personas" / "personas.jsonl", oracle, config,
            root / "train");
  const auto checkpoint = json::parse(read_file(root / "train" / "checkpoint.json"));
  CHECK(checkpoint.at("iteration").get<int>() == 2);

  config.max_iterations = 4;
  const auto resumed = run_train(root / "bundle", root / "personas" / "personas.jsonl",
                                 oracle, config, root / "train", /*resume=*/true);
  REQUIRE_FALSE(resumed.history.empty());
  CHECK(resumed.history.front().t == 3);  // continues counting where it stopped
  CHECK(resumed.history.front().L == 2 + 3);  // L0 grew with the resumed iteration count
}

TEST_CASE("cached pipeline reruns hit the cache instead of the oracle") {
  const auto root = fresh_dir("pipe_cache");
  OracleSpec oracle;
  oracle.cache_path = root / "cache.jsonl";

  run_synth(small_synth(8), oracle, root / "bundle");
  run_infer_personas(root / "bundle", oracle, root / "personas");
  const auto first = json::parse(read_file(root / "personas" / "manifest.json"));
  CHECK(first.at("oracle_calls").get<std::size_t>() > 0);

  // identical rerun: all persona-inference prompts are already cached
  run_infer_personas(root / "bundle", oracle, root / "personas2");
  const auto second = json::parse(read_file(root / "personas2" / "manifest.json"));
  CHECK(second.at("oracle_calls").get<std::size_t>() == 0);
  CHECK(second.at("cache_hits").get<std::size_t>() > 0);
  CHECK(read_file(root / "personas" / "personas.jsonl") ==
        read_file(root / "personas2" / "personas.jsonl"));
}

TEST_CASE("dump_loading prints the top personas for a profile") {
  const auto root = fresh_dir("pipe_dump");
  OracleSpec oracle;
  run_synth(small_synth(9), oracle, root / "bundle");
  const auto inference = run_infer_personas(root / "bundle", oracle, root / "personas");
  const auto params = random_params(4);
  const auto text = dump_loading(
      params, inference.basis,
      inference.basis.demographics_of(0), kDefaultLambda);
  CHECK(text.find("probability") != std::string::npos);
  CHECK(text.find(inference.basis.personas[0].source_respondent_id) != std::string::npos);
}

TEST_CASE("mnl synth scenario produces a trainable baseline bundle") {
  const auto root = fresh_dir("pipe_mnl");
  SynthSpec spec;
  spec.scenario = "mnl";
  spec.mnl_train_records = 400;
  spec.mnl_test_records = 100;
  spec.seed = 13;
  OracleSpec oracle;
  const auto bundle = run_synth(spec, oracle, root / "bundle");
  CHECK(bundle.detailed.empty());
  CHECK(bundle.general.size() == 400);
  CHECK(bundle.test.size() == 100);
  const auto set = run_baseline_mnl(root / "bundle", false, root / "mnl");
  CHECK(set.entries.size() == 100);
  const auto metrics = run_evaluate(root / "mnl" / "predictions.jsonl", root / "bundle",
                                    root / "evaluate");
  CHECK(metrics.macro_f1 > 0.3);  // far better than random on its own generator
}
