// palign: persona-loading alignment pipeline for travel mode choice.
//
// Stages: ingest -> split -> infer-personas -> train -> predict -> baseline
// -> evaluate/compare -> interpret, plus synth for offline experiments.

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>

#include "palign/pipeline.hpp"

namespace {

using namespace palign;
namespace fs = std::filesystem;

struct OracleCli {
  OracleSpec spec;
  std::string cache;

  void add_options(CLI::App* cmd) {
    cmd->add_option("--oracle", spec.kind, "Choice oracle: synthetic or http")
        ->check(CLI::IsMember({"synthetic", "http"}))
        ->capture_default_str();
    cmd->add_option("--cache", cache, "Persistent response cache (JSONL, appended)")
        ->envname("PALIGN_CACHE");
    cmd->add_flag("--replay-only", spec.replay_only,
                  "Serve only cached responses; a cache miss is an error");
    cmd->add_option("--endpoint", spec.http.endpoint_url,
                    "Chat-completions endpoint base URL (http oracle)")
        ->envname("PALIGN_ENDPOINT")
        ->capture_default_str();
    cmd->add_option("--model", spec.http.model_name, "Model name (http oracle)")
        ->envname("PALIGN_MODEL")
        ->capture_default_str();
    cmd->add_option("--temperature", spec.http.temperature,
                    "Sampling temperature (http oracle)")
        ->capture_default_str();
    cmd->add_option("--max-retries", spec.http.max_retries, "Retries per request")
        ->capture_default_str();
    cmd->add_option("--timeout", spec.http.request_timeout_seconds,
                    "Request timeout in seconds")
        ->capture_default_str();
    cmd->add_option("--max-parallel", spec.http.max_parallel_requests,
                    "Maximum in-flight oracle requests")
        ->capture_default_str();
    cmd->add_option("--api-key-env", spec.http.api_key_env,
                    "Environment variable holding the API key (never read from "
                    "files or flags)")
        ->envname("PALIGN_API_KEY_ENV")
        ->capture_default_str();
    cmd->add_option("--synthetic-seed", spec.synthetic.seed,
                    "Seed of the synthetic oracle")
        ->capture_default_str();
    cmd->add_option("--noise-scale", spec.synthetic.noise_scale,
                    "Gumbel noise scale of the synthetic oracle (0 = deterministic)")
        ->capture_default_str();
  }

  OracleSpec resolve() const {
    OracleSpec out = spec;
    if (!cache.empty()) out.cache_path = fs::path(cache);
    return out;
  }
};

std::pair<int, int> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ConfigError("range must be MIN:MAX, got '" + text + "'");
  }
  return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
}

SocioDemographics parse_profile(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() != 4) {
    throw ConfigError(
        "profile must be gender,age,income,group (e.g. male,40-54,>100k,car_user)");
  }
  SocioDemographics d;
  d.gender = gender_from_string(trim(parts[0]));
  d.age_band = age_band_from_string(trim(parts[1]));
  d.income_band = income_band_from_string(trim(parts[2]));
  d.user_group = user_group_from_string(trim(parts[3]));
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"palign: aligns a choice oracle with observed travel choices by "
               "inferring personas and learning an embedding-based persona "
               "loading function"};
  app.set_config("--config", "", "Read options from an INI/TOML config file");
  app.require_subcommand(1);
  std::function<void()> action;

  // ---- ingest ------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "Parse and filter a Swissmetro survey file");
  {
    auto input = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/ingest");
    ingest->add_option("--input", *input, "Swissmetro .dat file")
        ->required()
        ->check(CLI::ExistingFile);
    ingest->add_option("--output-dir", *outdir, "Output directory")->capture_default_str();
    ingest->callback([input, outdir, &action] {
      action = [=] {
        const auto result = run_ingest(*input, *outdir);
        std::cout << "rows: " << result.raw_rows << "\nrespondents: " << result.respondents
                  << "\nrecords: " << result.records
                  << "\npanels: " << result.panels_path.string() << "\n";
      };
    });
  }

  // ---- split ---------------------------------------------------------------
  auto* split_cmd = app.add_subcommand(
      "split", "Split filtered panels into detailed/general/test datasets");
  {
    auto input = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/bundle");
    auto seed = std::make_shared<std::uint64_t>(42);
    auto sizes = std::make_shared<SplitSizes>();
    split_cmd->add_option("--input", *input, "Swissmetro .dat file or panels.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    split_cmd->add_option("--seed", *seed, "Split seed")
        ->envname("PALIGN_SEED")
        ->capture_default_str();
    split_cmd
        ->add_option("--detailed", sizes->n_detailed_respondents,
                     "Respondents in the detailed set")
        ->capture_default_str();
    split_cmd
        ->add_option("--general", sizes->n_general_records, "Records in the general set")
        ->capture_default_str();
    split_cmd->add_option("--test", sizes->n_test_records, "Records in the test set")
        ->capture_default_str();
    split_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    split_cmd->callback([input, outdir, seed, sizes, &action] {
      action = [=] {
        const auto bundle = run_split(*input, *seed, *sizes, *outdir);
        std::cout << "detailed panels: " << bundle.detailed.size()
                  << "\ngeneral records: " << bundle.general.size()
                  << "\ntest records: " << bundle.test.size() << "\nbundle: " << *outdir
                  << "\n";
      };
    });
  }

  // ---- synth ---------------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synth", "Generate a synthetic population bundle for offline experiments");
  {
    auto spec = std::make_shared<SynthSpec>();
    auto oracle = std::make_shared<OracleCli>();
    auto outdir = std::make_shared<std::string>("out/synth");
    synth_cmd->add_option("--scenario", spec->scenario, "recoverability or mnl")
        ->check(CLI::IsMember({"recoverability", "mnl"}))
        ->capture_default_str();
    synth_cmd
        ->add_option("--respondents", spec->recoverability.n_detailed,
                     "Detailed respondents (recoverability)")
        ->capture_default_str();
    synth_cmd
        ->add_option("--general", spec->recoverability.n_general,
                     "General records (recoverability)")
        ->capture_default_str();
    synth_cmd->add_option("--test", spec->recoverability.n_test, "Test records")
        ->capture_default_str();
    synth_cmd
        ->add_option("--obs-per-panel", spec->recoverability.observations_per_panel,
                     "Observations per detailed respondent")
        ->capture_default_str();
    synth_cmd
        ->add_option("--records", spec->mnl_train_records, "Training records (mnl scenario)")
        ->capture_default_str();
    synth_cmd->add_option("--mnl-test", spec->mnl_test_records, "Test records (mnl scenario)")
        ->capture_default_str();
    synth_cmd->add_option("--seed", spec->seed, "Generator seed")
        ->envname("PALIGN_SEED")
        ->capture_default_str();
    synth_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    oracle->add_options(synth_cmd);
    synth_cmd->callback([spec, oracle, outdir, &action] {
      action = [=] {
        const auto bundle = run_synth(*spec, oracle->resolve(), *outdir);
        std::cout << "detailed panels: " << bundle.detailed.size()
                  << "\ngeneral records: " << bundle.general.size()
                  << "\ntest records: " << bundle.test.size() << "\nbundle: " << *outdir
                  << "\n";
      };
    });
  }

  // ---- infer-personas --------------------------------------------------------
  auto* infer =
      app.add_subcommand("infer-personas", "Infer the persona basis from detailed panels");
  {
    auto bundle = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/personas");
    auto oracle = std::make_shared<OracleCli>();
    infer->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    infer->add_option("--output-dir", *outdir, "Output directory")->capture_default_str();
    oracle->add_options(infer);
    infer->callback([bundle, outdir, oracle, &action] {
      action = [=] {
        const auto result = run_infer_personas(*bundle, oracle->resolve(), *outdir);
        std::cout << "personas: " << result.basis.size()
                  << "\nfailed: " << result.failed_ids.size() << "\nbasis: " << *outdir
                  << "/personas.jsonl\n";
      };
    });
  }

  // ---- train ----------------------------------------------------------------
  auto* train_cmd = app.add_subcommand(
      "train", "Estimate the persona-loading embedding by Monte-Carlo stochastic EM");
  {
    auto bundle = std::make_shared<std::string>();
    auto basis = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/train");
    auto config = std::make_shared<TrainConfig>();
    auto resume = std::make_shared<bool>(false);
    auto oracle = std::make_shared<OracleCli>();
    train_cmd->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    train_cmd->add_option("--basis", *basis, "Persona basis (personas.jsonl)")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--L0", config->L0, "Initial Monte-Carlo sample size")
        ->capture_default_str();
    train_cmd->add_option("--max-iterations", config->max_iterations, "EM iteration cap")
        ->capture_default_str();
    train_cmd
        ->add_option("--tol", config->convergence_tol,
                     "Convergence tolerance (sup-norm on beta change)")
        ->capture_default_str();
    train_cmd
        ->add_option("--alpha-e", config->alpha_e,
                     "Down-weighting of all-correct observations")
        ->capture_default_str();
    train_cmd
        ->add_option("--alpha-m", config->alpha_m,
                     "Variance-balance regularization strength")
        ->capture_default_str();
    train_cmd->add_option("--lambda", config->lambda, "Softmax scaling parameter")
        ->capture_default_str();
    train_cmd
        ->add_option("--learning-rate", config->m_step.learning_rate,
                     "M-step gradient ascent step size")
        ->capture_default_str();
    train_cmd
        ->add_option("--m-iterations", config->m_step.iterations, "M-step inner iterations")
        ->capture_default_str();
    train_cmd->add_option("--seed", config->seed, "Training seed")
        ->envname("PALIGN_SEED")
        ->capture_default_str();
    train_cmd->add_flag("--exact-ll", config->compute_exact_ll,
                        "Track the exact enumeration log-likelihood each iteration "
                        "(deterministic oracles only)");
    train_cmd->add_flag("--resume", *resume, "Resume from the checkpoint in --output-dir");
    train_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    oracle->add_options(train_cmd);
    train_cmd->callback([bundle, basis, outdir, config, resume, oracle, &action] {
      action = [=] {
        const auto result =
            run_train(*bundle, *basis, oracle->resolve(), *config, *outdir, *resume);
        std::cout << "iterations: " << result.history.size()
                  << "\nconverged: " << (result.converged ? "yes" : "no")
                  << "\nparams: " << *outdir << "/params.json\n";
      };
    });
  }

  // ---- predict ----------------------------------------------------------------
  auto* predict_cmd =
      app.add_subcommand("predict", "Predict test choices with the learned persona loading");
  {
    auto bundle = std::make_shared<std::string>();
    auto basis = std::make_shared<std::string>();
    auto params = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/predict");
    auto config = std::make_shared<PredictionConfig>();
    auto lambda = std::make_shared<double>(kDefaultLambda);
    auto aggregation = std::make_shared<std::string>("single_draw");
    auto oracle = std::make_shared<OracleCli>();
    predict_cmd->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    predict_cmd->add_option("--basis", *basis, "Persona basis")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--params", *params, "Trained embedding parameters")
        ->required()
        ->check(CLI::ExistingFile);
    predict_cmd->add_option("--repeats", config->repeats, "Oracle queries per record")
        ->capture_default_str();
    predict_cmd->add_option("--aggregation", *aggregation, "single_draw or majority_vote")
        ->check(CLI::IsMember({"single_draw", "majority_vote"}))
        ->capture_default_str();
    predict_cmd->add_option("--seed", config->seed, "Persona draw seed")
        ->envname("PALIGN_SEED")
        ->capture_default_str();
    predict_cmd->add_option("--lambda", *lambda, "Softmax scaling parameter")
        ->capture_default_str();
    predict_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    oracle->add_options(predict_cmd);
    predict_cmd->callback(
        [bundle, basis, params, outdir, config, lambda, aggregation, oracle, &action] {
          action = [=] {
            auto cfg = *config;
            cfg.aggregation = *aggregation == "majority_vote" ? Aggregation::MajorityVote
                                                              : Aggregation::SingleDraw;
            const auto set = run_predict(*bundle, *basis, *params, oracle->resolve(), cfg,
                                         *lambda, *outdir);
            std::cout << "predictions: " << set.entries.size()
                      << "\nfailed: " << set.failed_count() << "\noutput: " << *outdir
                      << "/predictions.jsonl\n";
          };
        });
  }

  // ---- baseline ------------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "Comparison models");
  baseline->require_subcommand(1);
  {
    auto* mnl = baseline->add_subcommand("mnl", "Multinomial logit baseline");
    auto bundle = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/baseline-mnl");
    auto ga = std::make_shared<bool>(true);
    mnl->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    mnl->add_flag("--ga-cost,!--no-ga-cost", *ga,
                  "Treat rail cost as zero for annual pass holders");
    mnl->add_option("--output-dir", *outdir, "Output directory")->capture_default_str();
    mnl->callback([bundle, outdir, ga, &action] {
      action = [=] {
        const auto set = run_baseline_mnl(*bundle, *ga, *outdir);
        std::cout << "predictions: " << set.entries.size() << "\noutput: " << *outdir
                  << "/predictions.jsonl\n";
      };
    });

    for (const std::string kind : {"zero-shot", "few-shot", "same-group"}) {
      auto* cmd = baseline->add_subcommand(
          kind, kind == "zero-shot"
                    ? "Prompt with demographics and context only"
                    : kind == "few-shot"
                          ? "Prompt with context-similar solved examples"
                          : "Prompt with a random persona from the same group");
      auto bundle_k = std::make_shared<std::string>();
      auto outdir_k = std::make_shared<std::string>("out/baseline-" + kind);
      auto spec = std::make_shared<PromptBaselineSpec>();
      auto basis_k = std::make_shared<std::string>();
      auto sweep = std::make_shared<std::string>();
      auto oracle = std::make_shared<OracleCli>();
      spec->kind = kind;
      cmd->add_option("--bundle", *bundle_k, "Bundle directory")
          ->required()
          ->check(CLI::ExistingDirectory);
      if (kind == "few-shot") {
        cmd->add_option("--examples", spec->few_shot.n_examples, "Number of solved examples")
            ->capture_default_str();
        cmd->add_option("--sweep", *sweep,
                        "Tune n_examples over MIN:MAX against the test set");
      }
      if (kind == "same-group") {
        cmd->add_option("--basis", *basis_k, "Persona basis")
            ->required()
            ->check(CLI::ExistingFile);
      }
      cmd->add_option("--seed", spec->seed, "Seed")
          ->envname("PALIGN_SEED")
          ->capture_default_str();
      cmd->add_option("--output-dir", *outdir_k, "Output directory")->capture_default_str();
      oracle->add_options(cmd);
      cmd->callback([bundle_k, outdir_k, spec, basis_k, sweep, oracle, kind, &action] {
        action = [=] {
          auto resolved = *spec;
          if (!basis_k->empty()) resolved.basis_path = fs::path(*basis_k);
          if (kind == "few-shot" && !sweep->empty()) {
            const auto [lo, hi] = parse_range(*sweep);
            const auto bundle = load_bundle(*bundle_k);
            auto pool = flatten(bundle.detailed);
            pool.insert(pool.end(), bundle.general.begin(), bundle.general.end());
            auto built = build_oracle(oracle->resolve());
            json rows = json::array();
            std::cout << "n_examples  macro_f1  weighted_f1\n";
            for (int n = lo; n <= hi; ++n) {
              std::vector<Alternative> truths, preds;
              for (const auto& rec : bundle.test) {
                truths.push_back(rec.chosen);
                preds.push_back(few_shot_predict(
                    rec, pool, FewShotConfig{static_cast<std::size_t>(n)}, *built.oracle));
              }
              const double macro = f1_scores(truths, preds, F1Weighting::Macro);
              const double weighted =
                  f1_scores(truths, preds, F1Weighting::WeightedByPredicted);
              std::printf("%10d  %8.4f  %11.4f\n", n, macro, weighted);
              rows.push_back(json{{"n", n}, {"macro_f1", macro}, {"weighted_f1", weighted}});
            }
            fs::create_directories(*outdir_k);
            write_file(fs::path(*outdir_k) / "few_shot_sweep.json",
                       json{{"kind", "few_shot_sweep"}, {"rows", rows}}.dump(2) + "\n");
            return;
          }
          const auto set =
              run_baseline_prompting(*bundle_k, resolved, oracle->resolve(), *outdir_k);
          std::cout << "predictions: " << set.entries.size()
                    << "\nfailed: " << set.failed_count() << "\noutput: " << *outdir_k
                    << "/predictions.jsonl\n";
        };
      });
    }
  }

  // ---- evaluate / compare -----------------------------------------------------
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "Score one prediction set against the test truths");
  {
    auto predictions = std::make_shared<std::string>();
    auto bundle = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/evaluate");
    evaluate_cmd->add_option("--predictions", *predictions, "predictions.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    evaluate_cmd->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    evaluate_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    evaluate_cmd->callback([predictions, bundle, outdir, &action] {
      action = [=] {
        const auto report = run_evaluate(*predictions, *bundle, *outdir);
        ComparisonReport c;
        c.truth_shares = report.truth_shares;
        c.methods = {report};
        std::cout << render_comparison_table(c);
      };
    });
  }

  auto* compare_cmd =
      app.add_subcommand("compare", "Compare several prediction sets side by side");
  {
    auto named = std::make_shared<std::vector<std::string>>();
    auto bundle = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/compare");
    compare_cmd
        ->add_option("--predictions", *named,
                     "name=path pairs of prediction files (repeatable)")
        ->required()
        ->expected(-1);
    compare_cmd->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    compare_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    compare_cmd->callback([named, bundle, outdir, &action] {
      action = [=] {
        std::vector<std::pair<std::string, fs::path>> paths;
        for (const auto& entry : *named) {
          const auto eq = entry.find('=');
          if (eq == std::string::npos) {
            throw ConfigError("--predictions expects name=path, got '" + entry + "'");
          }
          paths.emplace_back(entry.substr(0, eq), fs::path(entry.substr(eq + 1)));
        }
        const auto report = run_compare(paths, *bundle, *outdir);
        std::cout << render_comparison_table(report);
      };
    });
  }

  // ---- interpret -----------------------------------------------------------
  auto* interpret_cmd =
      app.add_subcommand("interpret", "Export labeled parameters and behavioral clusters");
  {
    auto params = std::make_shared<std::string>();
    auto bundle = std::make_shared<std::string>();
    auto outdir = std::make_shared<std::string>("out/interpret");
    auto spec = std::make_shared<InterpretSpec>();
    auto sweep = std::make_shared<std::string>();
    interpret_cmd->add_option("--params", *params, "Trained embedding parameters")
        ->required()
        ->check(CLI::ExistingFile);
    interpret_cmd->add_option("--bundle", *bundle, "Bundle directory")
        ->required()
        ->check(CLI::ExistingDirectory);
    interpret_cmd->add_option("--k", spec->k, "Cluster count")->capture_default_str();
    interpret_cmd->add_option("--restarts", spec->restarts, "K-means restarts")
        ->capture_default_str();
    interpret_cmd->add_option("--seed", spec->seed, "Clustering seed")
        ->envname("PALIGN_SEED")
        ->capture_default_str();
    interpret_cmd->add_option("--sweep", *sweep, "Also sweep k over MIN:MAX");
    interpret_cmd->add_option("--output-dir", *outdir, "Output directory")
        ->capture_default_str();
    interpret_cmd->callback([params, bundle, outdir, spec, sweep, &action] {
      action = [=] {
        auto resolved = *spec;
        if (!sweep->empty()) resolved.sweep = parse_range(*sweep);
        const auto clusters = run_interpret(*params, *bundle, resolved, *outdir);
        std::cout << "profiles: " << clusters.cluster_of.size() << "\nk: " << clusters.k
                  << "\ninertia: " << clusters.inertia << "\noutput: " << *outdir << "\n";
      };
    });
  }

  // ---- dump-loading -----------------------------------------------------------
  auto* dump = app.add_subcommand(
      "dump-loading", "Print the top-10 personas by loading probability for a profile");
  {
    auto params = std::make_shared<std::string>();
    auto basis = std::make_shared<std::string>();
    auto respondent = std::make_shared<std::string>();
    auto profile = std::make_shared<std::string>();
    auto lambda = std::make_shared<double>(kDefaultLambda);
    dump->add_option("--params", *params, "Trained embedding parameters")
        ->required()
        ->check(CLI::ExistingFile);
    dump->add_option("--basis", *basis, "Persona basis")
        ->required()
        ->check(CLI::ExistingFile);
    dump->add_option("--respondent", *respondent,
                     "Respondent id from the basis demographics index");
    dump->add_option("--profile", *profile, "Explicit profile: gender,age,income,group");
    dump->add_option("--lambda", *lambda, "Softmax scaling parameter")
        ->capture_default_str();
    dump->callback([params, basis, respondent, profile, lambda, &action] {
      action = [=] {
        const auto loaded_params = load_params(*params);
        const auto loaded_basis = load_basis(*basis);
        SocioDemographics d;
        if (!respondent->empty()) {
          auto it = loaded_basis.demographics_index.find(*respondent);
          if (it == loaded_basis.demographics_index.end()) {
            throw DataError("respondent not in basis index: " + *respondent);
          }
          d = it->second;
        } else if (!profile->empty()) {
          d = parse_profile(*profile);
        } else {
          throw ConfigError("dump-loading needs --respondent or --profile");
        }
        std::cout << dump_loading(loaded_params, loaded_basis, d, *lambda);
      };
    });
  }

  // global options (--config) remain reachable after a subcommand name
  std::function<void(CLI::App*)> enable_fallthrough = [&](CLI::App* cmd) {
    for (auto* sub : cmd->get_subcommands(/*filter=*/[](const CLI::App*) { return true; })) {
      sub->fallthrough();
      enable_fallthrough(sub);
    }
  };
  enable_fallthrough(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const palign::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }

  try {
    if (action) action();
  } catch (const palign::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
