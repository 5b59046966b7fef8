#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "palign/oracle.hpp"
#include "palign/prompts.hpp"
#include "palign/synth.hpp"

using namespace palign;
namespace fs = std::filesystem;

namespace {

ChoiceContext car_cheapest_context() {
  ChoiceContext c;
  c.purpose = Purpose::Leisure;
  c.train = {100, 60, 30};
  c.swissmetro = {100, 60, 20};
  c.car = {20, 60, 0};
  return c;
}

Persona cost_persona() { return extreme_persona(Factor::TravelCost, "p-cost"); }

SocioDemographics train_user_profile() {
  SocioDemographics d;
  d.gender = Gender::Male;
  d.age_band = AgeBand::From40To54;
  d.income_band = IncomeBand::From50kTo100k;
  d.user_group = UserGroup::TrainUser;
  return d;
}

}  // namespace

TEST_CASE("parse_choice_response handles the contract cases") {
  CHECK(parse_choice_response("Answer: CAR") == Alternative::Car);
  CHECK(parse_choice_response("I choose the Swissmetro.") == Alternative::Swissmetro);
  CHECK(parse_choice_response("I would drive there.") == Alternative::Car);
  CHECK(parse_choice_response("sm looks best") == Alternative::Swissmetro);
  CHECK(parse_choice_response(
            "Given the headway, the train is slow, so Swissmetro.\nFinal answer: "
            "swissmetro") == Alternative::Swissmetro);
  // the final-answer line overrides mode words elsewhere in the text
  CHECK(parse_choice_response("car car car\nfinal answer: Train") == Alternative::Train);

  CHECK_THROWS_AS(parse_choice_response(""), OracleError);
  CHECK_THROWS_AS(parse_choice_response("maybe train or car"), OracleError);
  CHECK_THROWS_AS(parse_choice_response("no transport words here"), OracleError);
  try {
    parse_choice_response("train or metro");
  } catch (const OracleError& e) {
    CHECK(e.kind() == OracleError::Kind::ResponseFormat);
    CHECK(e.raw_response() == "train or metro");
  }
}

TEST_CASE("synthetic oracle picks the cheapest mode for a cost-driven persona") {
  SyntheticOracle oracle;
  const auto prompt =
      build_simulation_prompt(train_user_profile(), car_cheapest_context(), cost_persona());
  CHECK(simulate_choice(oracle, prompt) == Alternative::Car);
}

TEST_CASE("synthetic oracle is deterministic and habit-sensitive") {
  SyntheticOracle oracle;
  auto d = train_user_profile();
  ChoiceContext even;
  even.train = {80, 60, 30};
  even.swissmetro = {80, 60, 30};
  even.car = {80, 60, 0};
  Persona habit = extreme_persona(Factor::TravelHabit, "p-habit");

  const auto p1 = build_simulation_prompt(d, even, habit);
  CHECK(simulate_choice(oracle, p1) == Alternative::Train);
  d.user_group = UserGroup::CarUser;
  const auto p2 = build_simulation_prompt(d, even, habit);
  CHECK(simulate_choice(oracle, p2) == Alternative::Car);

  for (int i = 0; i < 5; ++i) CHECK(oracle.complete(p1) == oracle.complete(p1));
}

TEST_CASE("synthetic oracle noise is seeded per prompt, not per call order") {
  SyntheticOracleParams params;
  params.noise_scale = 1.5;
  params.seed = 9;
  SyntheticOracle a(params), b(params);
  const auto d = train_user_profile();
  Rng rng(3);
  std::vector<Prompt> prompts;
  for (int i = 0; i < 20; ++i) {
    prompts.push_back(build_simulation_prompt(d, random_context(rng), cost_persona()));
  }
  // run the same prompts in opposite orders on two instances
  std::vector<std::string> fwd, rev(prompts.size());
  for (const auto& p : prompts) fwd.push_back(a.complete(p));
  for (std::size_t i = prompts.size(); i-- > 0;) rev[i] = b.complete(prompts[i]);
  CHECK(fwd == rev);

  SyntheticOracleParams other = params;
  other.seed = 10;
  SyntheticOracle c(other);
  bool any_difference = false;
  for (const auto& p : prompts) {
    any_difference = any_difference || c.complete(p) != a.complete(p);
  }
  CHECK(any_difference);
}

TEST_CASE("synthetic expert rates an always-cheapest chooser with travel cost 10") {
  SyntheticOracle oracle;
  RespondentPanel panel;
  panel.respondent_id = "r1";
  panel.demographics = train_user_profile();
  Rng rng(17);
  for (int j = 0; j < 9; ++j) {
    auto ctx = random_context(rng);
    // make car strictly cheapest and choose it
    ctx.car.cost = 10;
    ctx.train.cost = 120 + j;
    ctx.swissmetro.cost = 150 + j;
    panel.observations.emplace_back(ctx, Alternative::Car);
  }
  const auto text = infer_persona_text(oracle, build_inference_prompt(panel));
  CHECK(text.find("travel cost: 10") != std::string::npos);
  const auto persona = parse_persona(text, panel.respondent_id);
  CHECK(persona.rating(Factor::TravelCost) == 10);
}

TEST_CASE("cache serves repeats, separates distinct prompts, survives restarts") {
  const fs::path path = fs::temp_directory_path() / "oracle_cache_test.jsonl";
  fs::remove(path);
  auto inner = std::make_shared<SyntheticOracle>();
  const auto d = train_user_profile();
  const auto prompt = build_simulation_prompt(d, car_cheapest_context(), cost_persona());
  auto prompt2 = prompt;
  prompt2.user_text += " ";  // one character difference

  {
    CachedOracle cache(inner, path);
    const auto r1 = cache.complete(prompt);
    const auto r2 = cache.complete(prompt);
    CHECK(r1 == r2);
    CHECK(cache.hits() == 1);
    CHECK(inner->calls() == 1);
    cache.complete(prompt2);
    CHECK(inner->calls() == 2);
    CHECK(cache.entry_count() == 2);
  }
  {
    auto fresh_inner = std::make_shared<SyntheticOracle>();
    CachedOracle cache(fresh_inner, path);
    CHECK(parse_choice_response(cache.complete(prompt)) == Alternative::Car);
    cache.complete(prompt2);
    CHECK(fresh_inner->calls() == 0);  // fully served from disk
    CHECK(cache.deterministic());
  }
  {
    CachedOracle replay(std::make_shared<SyntheticOracle>(), path, /*replay_only=*/true);
    auto prompt3 = prompt;
    prompt3.user_text += "??";
    CHECK_THROWS_AS(replay.complete(prompt3), OracleError);
  }
  // a path that cannot exist: nested under a regular file
  const fs::path blocker = fs::temp_directory_path() / "cache_blocker_file";
  write_file(blocker, "x");
  CHECK_THROWS_AS(CachedOracle(inner, blocker / "cache.jsonl"), ConfigError);
}

TEST_CASE("cache transparency: cached deterministic oracle is extensionally equal") {
  const fs::path path = fs::temp_directory_path() / "oracle_cache_transparent.jsonl";
  fs::remove(path);
  auto plain = std::make_shared<SyntheticOracle>();
  auto wrapped = cached(std::make_shared<SyntheticOracle>(), path);
  Rng rng(21);
  const auto d = train_user_profile();
  for (int i = 0; i < 10; ++i) {
    const auto prompt = build_simulation_prompt(d, random_context(rng), cost_persona());
    CHECK(plain->complete(prompt) == wrapped->complete(prompt));
    CHECK(plain->complete(prompt) == wrapped->complete(prompt));
  }
}

TEST_CASE("http oracle: success, retry budget and bounded concurrency") {
  httplib::Server server;
  std::atomic<int> attempts{0};
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  std::atomic<bool> fail_mode{false};

  server.Post("/v1/chat/completions",
              [&](const httplib::Request& req, httplib::Response& res) {
                attempts.fetch_add(1);
                const int now = in_flight.fetch_add(1) + 1;
                int prev = peak.load();
                while (now > prev && !peak.compare_exchange_weak(prev, now)) {
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(20));
                if (fail_mode.load()) {
                  res.status = 500;
                  res.set_content("overloaded", "text/plain");
                } else {
                  const auto body = json::parse(req.body);
                  REQUIRE(body.at("messages").size() == 2);
                  const json reply{
                      {"choices",
                       json::array({json{{"message",
                                          json{{"role", "assistant"},
                                               {"content", "Final answer: Train"}}}}})}};
                  res.set_content(reply.dump(), "application/json");
                }
                in_flight.fetch_sub(1);
              });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  OracleConfig config;
  config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.model_name = "test-model";
  config.max_retries = 2;
  config.max_parallel_requests = 3;
  config.request_timeout_seconds = 5;
  HttpOracle oracle(config);

  const auto prompt =
      build_simulation_prompt(train_user_profile(), car_cheapest_context(), cost_persona());
  CHECK(simulate_choice(oracle, prompt) == Alternative::Train);

  // retry budget: 1 + max_retries attempts, then a transport error
  fail_mode = true;
  attempts = 0;
  CHECK_THROWS_AS(oracle.complete(prompt), OracleError);
  CHECK(attempts.load() == 3);

  // bounded concurrency: 12 parallel requests, at most 3 in flight
  fail_mode = false;
  peak = 0;
  parallel_for(12, 12, [&](std::size_t) { (void)oracle.complete(prompt); });
  CHECK(peak.load() <= 3);
  CHECK(peak.load() >= 2);  // parallelism actually happened

  server.stop();
  server_thread.join();
}

TEST_CASE("http oracle reports malformed payloads as response-format errors") {
  httplib::Server server;
  server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content("not json at all", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  OracleConfig config;
  config.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  config.max_retries = 0;
  config.request_timeout_seconds = 5;
  HttpOracle oracle(config);
  const auto prompt =
      build_simulation_prompt(train_user_profile(), car_cheapest_context(), cost_persona());
  try {
    oracle.complete(prompt);
    FAIL("expected an OracleError");
  } catch (const OracleError& e) {
    CHECK(e.kind() == OracleError::Kind::ResponseFormat);
    CHECK(e.raw_response() == "not json at all");
  }
  server.stop();
  server_thread.join();
}

TEST_CASE("oracle config validation") {
  OracleConfig config;
  config.temperature = -1;
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  config.endpoint_url = "api.openai.com";
  CHECK_THROWS_AS(config.validate(), ConfigError);
  config = {};
  CHECK_NOTHROW(config.validate());
}
