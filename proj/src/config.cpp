#include "fxbench/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "fxbench/error.hpp"
#include "fxbench/prompt.hpp"

namespace fxbench {
namespace {

using nlohmann::json;

const std::set<std::string> kTopLevelKeys = {
    "corpus",       "market_data",     "finbert_probabilities", "template_overrides", "universe",
    "prompts",      "backend",         "parallelism",           "price_per_1k",       "articles_per_day",
    "zero_policy",  "return_mode",     "averaging",             "day_offset_minutes", "clamp_scores",
    "deterministic", "output"};

const std::set<std::string> kBackendKeys = {"kind",        "model",           "fixture",      "base_url",
                                            "api_key_env", "timeout_seconds", "max_attempts", "base_backoff_ms"};

template <class T>
T field(const json& object, const std::string& key, const std::string& path, T fallback) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(path + key + ": wrong type");
  }
}

std::vector<std::string> string_list(const json& object, const std::string& key) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return {};
  if (it->is_string()) return split_list(it->get<std::string>());
  if (!it->is_array()) throw ConfigError(key + ": expected a list of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw ConfigError(key + ": expected a list of strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& path) {
  for (const auto& [key, value] : object.items()) {
    if (!known.count(key)) throw ConfigError(path + key + ": unknown setting");
  }
}

}  // namespace

std::string_view to_string(BackendKind kind) noexcept { return kind == BackendKind::Live ? "live" : "replay"; }

std::optional<BackendKind> backend_kind_from_string(std::string_view text) noexcept {
  if (text == "replay") return BackendKind::Replay;
  if (text == "live") return BackendKind::Live;
  return std::nullopt;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

std::filesystem::path RunConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

Universe RunConfig::universe_set() const {
  if (universe.empty()) return default_universe();
  Universe out;
  for (const auto& symbol : universe) {
    auto ticker = Ticker::parse(symbol);
    if (!ticker) throw ConfigError("universe: '" + symbol + "' is not a six-letter pair");
    out.insert(*ticker);
  }
  return out;
}

RetryPolicy RunConfig::retry_policy() const {
  RetryPolicy policy;
  policy.max_attempts = backend.max_attempts;
  policy.base_backoff = std::chrono::milliseconds{backend.base_backoff_ms};
  return policy;
}

LiveBackendConfig RunConfig::live_config() const {
  LiveBackendConfig live;
  live.base_url = backend.base_url;
  live.api_key_env = backend.api_key_env;
  live.timeout = std::chrono::seconds{backend.timeout_seconds};
  return live;
}

RunConfig parse_run_config(std::string_view json_text, std::filesystem::path base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc, kTopLevelKeys, "");

  RunConfig c;
  c.base_dir = std::move(base_dir);
  c.corpus = field<std::string>(doc, "corpus", "", "");
  c.market_data = field<std::string>(doc, "market_data", "", "");
  if (doc.contains("finbert_probabilities") && !doc["finbert_probabilities"].is_null()) {
    c.finbert_probabilities = field<std::string>(doc, "finbert_probabilities", "", "");
  }
  if (doc.contains("template_overrides") && !doc["template_overrides"].is_null()) {
    c.template_overrides = field<std::string>(doc, "template_overrides", "", "");
  }
  c.universe = string_list(doc, "universe");
  c.prompts = string_list(doc, "prompts");

  if (auto it = doc.find("backend"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("backend: expected an object");
    reject_unknown(*it, kBackendKeys, "backend.");
    auto& b = c.backend;
    const std::string kind = field<std::string>(*it, "kind", "backend.", "replay");
    auto parsed = backend_kind_from_string(kind);
    if (!parsed) throw ConfigError("backend.kind: expected 'replay' or 'live', got '" + kind + "'");
    b.kind = *parsed;
    b.model = field<std::string>(*it, "model", "backend.", b.model);
    b.fixture = field<std::string>(*it, "fixture", "backend.", b.fixture);
    b.base_url = field<std::string>(*it, "base_url", "backend.", b.base_url);
    b.api_key_env = field<std::string>(*it, "api_key_env", "backend.", b.api_key_env);
    b.timeout_seconds = field<int>(*it, "timeout_seconds", "backend.", b.timeout_seconds);
    b.max_attempts = field<int>(*it, "max_attempts", "backend.", b.max_attempts);
    b.base_backoff_ms = field<int>(*it, "base_backoff_ms", "backend.", b.base_backoff_ms);
  }

  c.parallelism = field<int>(doc, "parallelism", "", c.parallelism);
  c.price_per_1k = field<double>(doc, "price_per_1k", "", c.price_per_1k);
  c.articles_per_day = field<std::int64_t>(doc, "articles_per_day", "", c.articles_per_day);

  const std::string zero = field<std::string>(doc, "zero_policy", "", "exclude");
  auto zp = zero_policy_from_string(zero);
  if (!zp) throw ConfigError("zero_policy: expected exclude, count_wrong or count_half, got '" + zero + "'");
  c.zero_policy = *zp;

  const std::string mode = field<std::string>(doc, "return_mode", "", "close_to_close");
  auto rm = return_mode_from_string(mode);
  if (!rm) throw ConfigError("return_mode: expected close_to_close or intraday, got '" + mode + "'");
  c.return_mode = *rm;

  const std::string averaging = field<std::string>(doc, "averaging", "", "weighted");
  if (averaging == "weighted") {
    c.averaging = Averaging::Weighted;
  } else if (averaging == "macro") {
    c.averaging = Averaging::Macro;
  } else {
    throw ConfigError("averaging: expected weighted or macro, got '" + averaging + "'");
  }

  c.day_offset_minutes = field<int>(doc, "day_offset_minutes", "", 0);
  c.clamp_scores = field<bool>(doc, "clamp_scores", "", false);
  c.deterministic = field<bool>(doc, "deterministic", "", true);
  c.output = field<std::string>(doc, "output", "", c.output);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

nlohmann::json config_snapshot(const RunConfig& c) {
  json backend = {{"kind", to_string(c.backend.kind)}, {"model", c.backend.model}};
  if (c.backend.kind == BackendKind::Replay) {
    backend["fixture"] = c.backend.fixture;
  } else {
    backend["base_url"] = c.backend.base_url;
    backend["api_key_env"] = c.backend.api_key_env;
    backend["timeout_seconds"] = c.backend.timeout_seconds;
    backend["max_attempts"] = c.backend.max_attempts;
    backend["base_backoff_ms"] = c.backend.base_backoff_ms;
  }
  json out = {{"corpus", c.corpus},
              {"market_data", c.market_data},
              {"finbert_probabilities", c.finbert_probabilities ? json(*c.finbert_probabilities) : json()},
              {"template_overrides", c.template_overrides ? json(*c.template_overrides) : json()},
              {"universe", c.universe},
              {"prompts", c.prompts},
              {"backend", backend},
              {"price_per_1k", c.price_per_1k},
              {"articles_per_day", c.articles_per_day},
              {"zero_policy", to_string(c.zero_policy)},
              {"return_mode", to_string(c.return_mode)},
              {"averaging", to_string(c.averaging)},
              {"day_offset_minutes", c.day_offset_minutes},
              {"clamp_scores", c.clamp_scores},
              {"deterministic", c.deterministic}};
  return out;
}

std::vector<Diagnostic> validate_config(const RunConfig& c) {
  std::vector<Diagnostic> out;
  auto require_file = [&](const std::string& name, const std::string& value) {
    if (value.empty()) {
      out.push_back({name, "required"});
    } else if (!std::filesystem::is_regular_file(c.resolve(value))) {
      out.push_back({name, "file not found: " + c.resolve(value).string()});
    }
  };

  require_file("corpus", c.corpus);
  if (c.market_data.empty()) {
    out.push_back({"market_data", "required"});
  } else if (!std::filesystem::is_directory(c.resolve(c.market_data))) {
    out.push_back({"market_data", "directory not found: " + c.resolve(c.market_data).string()});
  }
  if (c.finbert_probabilities) require_file("finbert_probabilities", *c.finbert_probabilities);
  if (c.backend.kind == BackendKind::Replay) require_file("backend.fixture", c.backend.fixture);

  Universe universe;
  try {
    universe = c.universe_set();
  } catch (const ConfigError& e) {
    out.push_back({"universe", e.what()});
  }
  if (!c.market_data.empty() && std::filesystem::is_directory(c.resolve(c.market_data))) {
    for (const auto& t : universe) {
      auto file = c.resolve(c.market_data) / (t.symbol() + ".csv");
      if (!std::filesystem::is_regular_file(file)) out.push_back({"market_data", "missing " + file.string()});
    }
  }

  std::vector<PromptTemplate> registry = builtin_registry();
  if (c.template_overrides) {
    auto path = c.resolve(*c.template_overrides);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      out.push_back({"template_overrides", "file not found: " + path.string()});
    } else {
      std::ostringstream text;
      text << in.rdbuf();
      try {
        registry = apply_template_overrides(std::move(registry), text.str());
      } catch (const Error& e) {
        out.push_back({"template_overrides", e.what()});
      }
    }
  }
  for (const auto& id : c.prompts) {
    if (id == "FinBERT" || id == "FinBERT-N") {
      if (!c.finbert_probabilities) out.push_back({"prompts", id + " needs finbert_probabilities"});
    } else if (!find_template(registry, id)) {
      out.push_back({"prompts", "unknown prompt id '" + id + "'"});
    }
  }

  if (c.parallelism < 1) out.push_back({"parallelism", "must be at least 1"});
  if (!(c.price_per_1k >= 0.0)) out.push_back({"price_per_1k", "must be non-negative"});
  if (c.articles_per_day < 0) out.push_back({"articles_per_day", "must be non-negative"});
  if (c.backend.model.empty()) out.push_back({"backend.model", "required"});
  if (c.backend.max_attempts < 1) out.push_back({"backend.max_attempts", "must be at least 1"});
  if (c.backend.base_backoff_ms < 0) out.push_back({"backend.base_backoff_ms", "must be non-negative"});
  if (c.backend.timeout_seconds < 1) out.push_back({"backend.timeout_seconds", "must be at least 1"});
  if (c.day_offset_minutes <= -24 * 60 || c.day_offset_minutes >= 24 * 60) {
    out.push_back({"day_offset_minutes", "must lie strictly between -1440 and 1440"});
  }
  if (c.output.empty()) out.push_back({"output", "required"});
  return out;
}

}  // namespace fxbench
