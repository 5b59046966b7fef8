#pragma once

#if defined(PALIGN_ENABLE_TLS) && !defined(CPPHTTPLIB_OPENSSL_SUPPORT)
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "palign/digest.hpp"
#include "palign/domain.hpp"
#include "palign/errors.hpp"
#include "palign/io.hpp"
#include "palign/persona.hpp"
#include "palign/prompt.hpp"
#include "palign/util.hpp"

namespace palign {

struct OracleConfig {
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o";
  double temperature = 0.0;
  int max_retries = 2;
  double request_timeout_seconds = 60.0;
  int max_parallel_requests = 4;
  std::string api_key_env = "OPENAI_API_KEY";

  void validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (request_timeout_seconds <= 0) throw ConfigError("request_timeout must be > 0");
    if (max_parallel_requests < 1) throw ConfigError("max_parallel_requests must be >= 1");
    if (endpoint_url.find("://") == std::string::npos) {
      throw ConfigError("endpoint_url must include a scheme: " + endpoint_url);
    }
  }
};

// Oracle over prompts. Thread-safe; implementations must tolerate concurrent
// complete() calls.
class ChoiceOracle {
 public:
  virtual ~ChoiceOracle() = default;

  std::string complete(const Prompt& prompt) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_complete(prompt);
  }

  std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }

  // Stable identifier for manifests.
  virtual std::string identity() const = 0;
  // The (model, temperature) part that goes into cache keys.
  virtual std::string cache_salt() const { return identity(); }
  // True when identical prompts always yield identical responses.
  virtual bool deterministic() const = 0;

 private:
  virtual std::string do_complete(const Prompt& prompt) = 0;

  std::atomic<std::size_t> calls_{0};
};

inline std::string make_cache_key(const std::string& salt, const std::string& system_text,
                                  const std::string& user_text) {
  Sha256 h;
  h.update(salt);
  h.update(std::string_view("\x1f", 1));
  h.update(system_text);
  h.update(std::string_view("\x1f", 1));
  h.update(user_text);
  return to_hex(h.finish());
}

// ---------------------------------------------------------------------------
// Response parsing

// Case-insensitive keyword match over word tokens. A "Final answer" line, when
// present, takes precedence over the rest of the text.
inline Alternative parse_choice_response(const std::string& text) {
  if (trim(text).empty()) {
    throw OracleError(OracleError::Kind::ResponseFormat, "empty oracle response", text);
  }
  std::optional<std::string> final_line;
  for (const auto& line : split_lines(text)) {
    if (to_lower(line).find("final answer") != std::string::npos) final_line = line;
  }
  const std::string target = to_lower(final_line ? *final_line : text);

  bool seen[3] = {false, false, false};
  std::string token;
  auto flush_token = [&] {
    if (token.empty()) return;
    if (token == "train") seen[0] = true;
    if (token == "swissmetro" || token == "metro" || token == "sm") seen[1] = true;
    if (token == "car" || token == "drive") seen[2] = true;
    token.clear();
  };
  for (char c : target) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(c);
    } else {
      flush_token();
    }
  }
  flush_token();

  const int count = seen[0] + seen[1] + seen[2];
  if (count == 0) {
    throw OracleError(OracleError::Kind::ResponseFormat,
                      "no transport mode found in oracle response", text);
  }
  if (count > 1) {
    throw OracleError(OracleError::Kind::ResponseFormat,
                      "multiple distinct transport modes in oracle response", text);
  }
  if (seen[0]) return Alternative::Train;
  if (seen[1]) return Alternative::Swissmetro;
  return Alternative::Car;
}

inline Alternative simulate_choice(ChoiceOracle& oracle, const Prompt& prompt) {
  return parse_choice_response(oracle.complete(prompt));
}

inline std::string infer_persona_text(ChoiceOracle& expert, const Prompt& prompt) {
  return expert.complete(prompt);
}

// ---------------------------------------------------------------------------
// Synthetic oracle (offline stand-in for the LLM)

struct SyntheticOracleParams {
  double time_weight = 1.0;
  double cost_weight = 1.0;
  double headway_weight = 1.0;
  double habit_bonus = 1.0;
  double comfort_bonus = 0.5;
  double purpose_shift = 0.0;
  double noise_scale = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    for (double w : {time_weight, cost_weight, headway_weight, habit_bonus,
                     comfort_bonus, purpose_shift, noise_scale}) {
      if (!std::isfinite(w)) throw ConfigError("synthetic oracle weights must be finite");
    }
    if (noise_scale < 0) throw ConfigError("noise_scale must be >= 0");
  }

  json to_json() const {
    return json{{"time_weight", time_weight},     {"cost_weight", cost_weight},
                {"headway_weight", headway_weight}, {"habit_bonus", habit_bonus},
                {"comfort_bonus", comfort_bonus},  {"purpose_shift", purpose_shift},
                {"noise_scale", noise_scale},      {"seed", seed}};
  }
};

namespace detail {

struct ParsedScenario {
  std::array<ModeAttributes, 3> attrs{};
  std::array<bool, 3> have{};
  std::optional<Alternative> chosen;
  bool business_purpose = false;
};

// Shared line-level parsers for the prompt texture produced by prompts.hpp.
struct PromptScan {
  std::optional<UserGroup> user_group;
  std::array<std::optional<int>, kFactorCount> ratings;
  ParsedScenario current;                 // last Alternatives block seen
  bool last_purpose_business = false;     // from the last trip-context purpose line
  std::vector<ParsedScenario> scenarios;  // expert prompts only
  bool expert_task = false;
};

inline std::optional<Alternative> mode_from_name(std::string_view lower) {
  if (lower == "train") return Alternative::Train;
  if (lower == "swissmetro") return Alternative::Swissmetro;
  if (lower == "car") return Alternative::Car;
  return std::nullopt;
}

inline bool parse_mode_attr_line(const std::string& line, ParsedScenario& sc) {
  // "- <Mode>: cost C CHF, travel time T minutes, headway H minutes"
  auto colon = line.find(':');
  if (colon == std::string::npos) return false;
  const auto mode = mode_from_name(to_lower(trim(line.substr(0, colon))));
  if (!mode) return false;
  const std::string rest = to_lower(line.substr(colon + 1));
  double cost = 0, tt = 0, he = 0;
  auto grab = [&](std::string_view label, double& out) {
    auto pos = rest.find(label);
    if (pos == std::string::npos) return false;
    const char* start = rest.c_str() + pos + label.size();
    char* end = nullptr;
    out = std::strtod(start, &end);
    return end != start;
  };
  if (!grab("cost ", cost) || !grab("travel time ", tt) || !grab("headway ", he)) {
    return false;
  }
  const auto idx = static_cast<std::size_t>(*mode);
  sc.attrs[idx] = {cost, tt, he};
  sc.have[idx] = true;
  return true;
}

inline PromptScan scan_prompt(const Prompt& prompt) {
  PromptScan scan;
  scan.expert_task = prompt.user_text.find("Observed choices:") != std::string::npos;

  for (const auto& raw : split_lines(prompt.user_text)) {
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (starts_with(line, "Scenario ")) {
      scan.current = ParsedScenario{};
      continue;
    }
    if (starts_with(line, "Alternatives:")) {
      if (!scan.expert_task) scan.current = ParsedScenario{};
      continue;
    }
    if (!starts_with(line, "-")) continue;
    line = trim(line.substr(1));
    const std::string lower = to_lower(line);

    if (starts_with(lower, "habitual mode user group:")) {
      const auto value = trim(lower.substr(lower.find(':') + 1));
      scan.user_group = value == "car user" ? UserGroup::CarUser : UserGroup::TrainUser;
      continue;
    }
    if (starts_with(lower, "chosen mode:")) {
      const auto value = trim(lower.substr(lower.find(':') + 1));
      scan.current.chosen = mode_from_name(value);
      scan.current.business_purpose = scan.last_purpose_business;
      scan.scenarios.push_back(scan.current);
      scan.current = ParsedScenario{};
      continue;
    }
    if (starts_with(lower, "trip purpose:")) {
      const auto value = trim(lower.substr(lower.find(':') + 1));
      char* end = nullptr;
      const long rating = std::strtol(value.c_str(), &end, 10);
      if (end != value.c_str() && trim(end).empty()) {
        scan.ratings[static_cast<std::size_t>(Factor::TripPurpose)] = static_cast<int>(rating);
      } else {
        scan.last_purpose_business =
            value == "business" || value == "return from business";
      }
      continue;
    }
    bool matched_factor = false;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      if (f == static_cast<std::size_t>(Factor::TripPurpose)) continue;
      const auto& label = kFactorLabels[f];
      if (starts_with(lower, std::string(label) + ":")) {
        const auto value = trim(lower.substr(label.size() + 1));
        char* end = nullptr;
        const long rating = std::strtol(value.c_str(), &end, 10);
        if (end != value.c_str()) scan.ratings[f] = static_cast<int>(rating);
        matched_factor = true;
        break;
      }
    }
    if (matched_factor) continue;
    parse_mode_attr_line(line, scan.current);
  }
  return scan;
}

}  // namespace detail

// Deterministic at noise_scale = 0. With noise, the per-request generator is
// seeded from the prompt digest, so outputs do not depend on call order or
// concurrency.
class SyntheticOracle final : public ChoiceOracle {
 public:
  explicit SyntheticOracle(SyntheticOracleParams params = {}) : params_(params) {
    params_.validate();
    identity_ = "synthetic-v1#" + sha256_hex(params_.to_json().dump()).substr(0, 12);
  }

  std::string identity() const override { return identity_; }
  bool deterministic() const override { return true; }

  const SyntheticOracleParams& params() const { return params_; }

  // Utility of one alternative under the default monotone mapping from the
  // six persona factors.
  double utility(Alternative mode, const ModeAttributes& m,
                 const std::array<int, kFactorCount>& ratings, UserGroup group,
                 bool business_purpose) const {
    auto r = [&](Factor f) {
      return static_cast<double>(ratings[static_cast<std::size_t>(f)]) / 10.0;
    };
    double v = 0.0;
    v -= r(Factor::TravelCost) * params_.cost_weight * m.cost / 100.0;
    v -= r(Factor::TravelTime) * params_.time_weight * m.travel_time / 100.0;
    v -= r(Factor::Flexibility) * params_.headway_weight * m.headway / 100.0;
    const Alternative habitual =
        group == UserGroup::CarUser ? Alternative::Car : Alternative::Train;
    if (mode == habitual) v += r(Factor::TravelHabit) * params_.habit_bonus;
    if (mode == Alternative::Swissmetro) {
      v += r(Factor::Comfort) * params_.comfort_bonus;
      if (business_purpose) v += r(Factor::TripPurpose) * params_.purpose_shift;
    }
    return v;
  }

 private:
  std::string do_complete(const Prompt& prompt) override {
    const auto scan = detail::scan_prompt(prompt);
    if (scan.expert_task) return expert_response(scan);
    return choice_response(prompt, scan);
  }

  std::string choice_response(const Prompt& prompt, const detail::PromptScan& scan) const {
    if (!scan.user_group) {
      throw OracleError(OracleError::Kind::ResponseFormat,
                        "synthetic oracle: no user group in prompt", prompt.user_text);
    }
    for (bool have : scan.current.have) {
      if (!have) {
        throw OracleError(OracleError::Kind::ResponseFormat,
                          "synthetic oracle: missing alternative attributes in prompt",
                          prompt.user_text);
      }
    }
    std::array<int, kFactorCount> ratings;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      ratings[f] = scan.ratings[f].value_or(5);  // the stand-in's own disposition
    }

    std::array<double, 3> noise{};
    if (params_.noise_scale > 0) {
      Rng rng(request_seed(prompt));
      for (auto& n : noise) n = params_.noise_scale * rng.gumbel();
    }

    Alternative best = Alternative::Train;
    double best_v = -std::numeric_limits<double>::infinity();
    for (auto mode : kAlternatives) {
      const double v = utility(mode, scan.current.attrs[static_cast<std::size_t>(mode)],
                               ratings, *scan.user_group, scan.last_purpose_business) +
                       noise[static_cast<std::size_t>(mode)];
      if (v > best_v) {  // ties keep the earlier mode: Train < Swissmetro < Car
        best_v = v;
        best = mode;
      }
    }
    static constexpr std::array<std::string_view, 3> titles = {"Train", "Swissmetro", "Car"};
    return "Weighing the stated preferences against the offered attributes.\nFinal answer: " +
           std::string(titles[static_cast<std::size_t>(best)]) + "\n";
  }

  std::string expert_response(const detail::PromptScan& scan) const {
    if (scan.scenarios.empty() || !scan.user_group) {
      throw OracleError(OracleError::Kind::ResponseFormat,
                        "synthetic expert: no scenarios in prompt");
    }
    const double n = static_cast<double>(scan.scenarios.size());
    const Alternative habitual =
        *scan.user_group == UserGroup::CarUser ? Alternative::Car : Alternative::Train;

    double time_hits = 0, cost_hits = 0, flex_hits = 0, habit_hits = 0, comfort_hits = 0;
    double business_total = 0, business_sm = 0;
    constexpr double eps = 1e-9;
    for (const auto& sc : scan.scenarios) {
      if (!sc.chosen) continue;
      const auto chosen = *sc.chosen;
      const auto& picked = sc.attrs[static_cast<std::size_t>(chosen)];
      double min_cost = picked.cost, min_tt = picked.travel_time, min_he = picked.headway;
      for (const auto& a : sc.attrs) {
        min_cost = std::min(min_cost, a.cost);
        min_tt = std::min(min_tt, a.travel_time);
        min_he = std::min(min_he, a.headway);
      }
      if (picked.travel_time <= min_tt + eps) time_hits += 1;
      if (picked.cost <= min_cost + eps) cost_hits += 1;
      if (picked.headway <= min_he + eps) flex_hits += 1;
      if (chosen == habitual) habit_hits += 1;
      if (chosen == Alternative::Swissmetro) comfort_hits += 1;
      if (sc.business_purpose) {
        business_total += 1;
        if (chosen == Alternative::Swissmetro) business_sm += 1;
      }
    }

    auto rate = [](double frac) {
      return std::clamp(1 + static_cast<int>(std::llround(9.0 * frac)), 1, 10);
    };
    std::array<int, kFactorCount> ratings{};
    ratings[static_cast<std::size_t>(Factor::TravelTime)] = rate(time_hits / n);
    ratings[static_cast<std::size_t>(Factor::TravelCost)] = rate(cost_hits / n);
    ratings[static_cast<std::size_t>(Factor::Flexibility)] = rate(flex_hits / n);
    ratings[static_cast<std::size_t>(Factor::TravelHabit)] = rate(habit_hits / n);
    ratings[static_cast<std::size_t>(Factor::Comfort)] = rate(comfort_hits / n);
    ratings[static_cast<std::size_t>(Factor::TripPurpose)] =
        rate(business_total > 0 ? business_sm / business_total : 0.5);

    std::size_t dominant = 0;
    for (std::size_t f = 1; f < kFactorCount; ++f) {
      if (ratings[f] > ratings[dominant]) dominant = f;
    }
    std::string out;
    for (std::size_t f = 0; f < kFactorCount; ++f) {
      out += std::string(kFactorLabels[f]) + ": " + std::to_string(ratings[f]) + "\n";
    }
    out += "summary: values " + std::string(kFactorLabels[dominant]) + " most across " +
           std::to_string(scan.scenarios.size()) + " observed choices\n";
    return out;
  }

  std::uint64_t request_seed(const Prompt& prompt) const {
    const auto hex = make_cache_key(identity_, prompt.system_text, prompt.user_text);
    std::uint64_t x = 0;
    for (int i = 0; i < 16; ++i) {
      const char c = hex[static_cast<std::size_t>(i)];
      x = (x << 4) | static_cast<std::uint64_t>(c <= '9' ? c - '0' : c - 'a' + 10);
    }
    return splitmix64(params_.seed ^ x);
  }

  SyntheticOracleParams params_;
  std::string identity_;
};

// ---------------------------------------------------------------------------
// Persistent cache wrapper

class CachedOracle final : public ChoiceOracle {
 public:
  CachedOracle(std::shared_ptr<ChoiceOracle> inner, std::filesystem::path path,
               bool replay_only = false)
      : inner_(std::move(inner)), path_(std::move(path)), replay_only_(replay_only) {
    if (std::filesystem::exists(path_)) {
      for (const auto& row : read_jsonl(path_)) {
        entries_[row.at("key").get<std::string>()] = row.at("response").get<std::string>();
      }
    }
    if (!replay_only_) {
      std::error_code ec;
      if (path_.has_parent_path()) {
        std::filesystem::create_directories(path_.parent_path(), ec);
      }
      appender_.open(path_, std::ios::app | std::ios::binary);
      if (ec || !appender_) {
        throw ConfigError("cache path is not writable: " + path_.string());
      }
    }
  }

  std::string identity() const override { return inner_->identity(); }
  std::string cache_salt() const override { return inner_->cache_salt(); }
  bool deterministic() const override { return replay_only_ || inner_->deterministic(); }

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  std::size_t entry_count() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::string do_complete(const Prompt& prompt) override {
    const auto key = make_cache_key(cache_salt(), prompt.system_text, prompt.user_text);
    {
      std::lock_guard lock(mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        hits_.fetch_add(1, std::memory_order_relaxed);
        return it->second;
      }
    }
    if (replay_only_) {
      throw OracleError(OracleError::Kind::Transport,
                        "cache miss in replay-only mode (key " + key + ")");
    }
    const std::string response = inner_->complete(prompt);
    {
      std::lock_guard lock(mutex_);
      entries_[key] = response;
      appender_ << json{{"key", key}, {"response", response}}.dump() << '\n';
      appender_.flush();
      misses_.fetch_add(1, std::memory_order_relaxed);
    }
    return response;
  }

  std::shared_ptr<ChoiceOracle> inner_;
  std::filesystem::path path_;
  bool replay_only_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::ofstream appender_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

inline std::shared_ptr<ChoiceOracle> cached(std::shared_ptr<ChoiceOracle> oracle,
                                            const std::filesystem::path& cache_path,
                                            bool replay_only = false) {
  return std::make_shared<CachedOracle>(std::move(oracle), cache_path, replay_only);
}

// ---------------------------------------------------------------------------
// Chat-completions HTTP client

class HttpOracle final : public ChoiceOracle {
 public:
  explicit HttpOracle(OracleConfig config) : config_(std::move(config)), slots_(0) {
    config_.validate();
    const auto scheme_end = config_.endpoint_url.find("://");
    const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = config_.endpoint_url;
      path_prefix_.clear();
    } else {
      origin_ = config_.endpoint_url.substr(0, path_start);
      path_prefix_ = config_.endpoint_url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
    slots_.release(config_.max_parallel_requests);
  }

  std::string identity() const override {
    return config_.model_name + "@" + config_.endpoint_url;
  }

  std::string cache_salt() const override {
    return config_.model_name + "|temperature=" + format_cache_number(config_.temperature);
  }

  bool deterministic() const override { return false; }

 private:
  static std::string format_cache_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }

  std::string do_complete(const Prompt& prompt) override {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>* s;
      ~Release() { s->release(); }
    } release{&slots_};

    const json body{
        {"model", config_.model_name},
        {"temperature", config_.temperature},
        {"messages",
         json::array({json{{"role", "system"}, {"content", prompt.system_text}},
                      json{{"role", "user"}, {"content", prompt.user_text}}})}};
    const std::string payload = body.dump();

    std::optional<OracleError> last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
      }
      httplib::Client client(origin_);
      const auto seconds = static_cast<time_t>(config_.request_timeout_seconds);
      const auto micros = static_cast<time_t>(
          (config_.request_timeout_seconds - static_cast<double>(seconds)) * 1e6);
      client.set_connection_timeout(seconds, micros);
      client.set_read_timeout(seconds, micros);
      client.set_write_timeout(seconds, micros);

      httplib::Headers headers;
      if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

      auto res = client.Post(path_prefix_ + "/chat/completions", headers, payload,
                             "application/json");
      if (!res) {
        last_error = OracleError(OracleError::Kind::Transport,
                                 "transport failure contacting " + origin_ + ": " +
                                     httplib::to_string(res.error()));
        continue;
      }
      if (res->status != 200) {
        last_error = OracleError(OracleError::Kind::Transport,
                                 "HTTP " + std::to_string(res->status) + " from " + origin_,
                                 res->body);
        continue;
      }
      try {
        const auto parsed = json::parse(res->body);
        return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        last_error = OracleError(OracleError::Kind::ResponseFormat,
                                 std::string("malformed chat-completions response: ") +
                                     e.what(),
                                 res->body);
        continue;
      }
    }
    throw *last_error;
  }

  OracleConfig config_;
  std::string origin_;
  std::string path_prefix_;
  std::string api_key_;
  std::counting_semaphore<> slots_;
};

// ---------------------------------------------------------------------------
// Bounded-width parallel map. Results are indexed, so downstream order never
// depends on completion order.

template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
  if (n == 0) return;
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(n)));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace palign
