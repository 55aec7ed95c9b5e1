// Drives the fxbench binary end to end against the replay fixture under
// data/e2e and compares its output with the checked-in golden run.

#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "fxbench/fixture.hpp"
#include "support/cli_runner.hpp"
#include "support/mock_chat_server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using fxbench::testing::quote;
using fxbench::testing::run_program;
using fxbench::testing::slurp;
using fxbench::testing::TempDir;
using fxbench::testing::tree_diff;
using fxbench::testing::write_file;

namespace {

const fs::path kE2e = fs::path(FXBENCH_TEST_DATA) / "e2e";

fxbench::testing::CliResult run_cli(const std::string& args) { return run_program(FXBENCH_CLI, args); }

std::string config_arg() { return "--config " + quote((kE2e / "config.json").string()); }

// The e2e config with every input made absolute, so it can live elsewhere.
json portable_config() {
  json config = json::parse(slurp(kE2e / "config.json"));
  for (const char* key : {"corpus", "market_data", "finbert_probabilities"}) {
    config[key] = (kE2e / config[key].get<std::string>()).string();
  }
  config["backend"]["fixture"] = (kE2e / config["backend"]["fixture"].get<std::string>()).string();
  return config;
}

}  // namespace

TEST_CASE("validate accepts the e2e config") {
  const auto r = run_cli("validate " + config_arg());
  CHECK(r.exit == 0);
  CHECK(r.out == "ok\n");
  CHECK(r.err.empty());
}

TEST_CASE("validate reports bad fields with exit code 2") {
  TempDir dir;
  SUBCASE("missing corpus") {
    json config = portable_config();
    config["corpus"] = (dir.path() / "nowhere.csv").string();
    write_file(dir.path() / "c.json", config.dump());
    const auto r = run_cli("validate --config " + quote((dir.path() / "c.json").string()));
    CHECK(r.exit == 2);
    CHECK(r.err.find("config: corpus:") != std::string::npos);
  }
  SUBCASE("unknown prompt id") {
    const auto r = run_cli("validate " + config_arg() + " --prompts P1,P9");
    CHECK(r.exit == 2);
    CHECK(r.err.find("P9") != std::string::npos);
  }
  SUBCASE("malformed json") {
    write_file(dir.path() / "c.json", "{\"corpus\": ");
    const auto r = run_cli("validate --config " + quote((dir.path() / "c.json").string()));
    CHECK(r.exit == 2);
  }
  SUBCASE("unknown key") {
    json config = portable_config();
    config["paralellism"] = 2;
    write_file(dir.path() / "c.json", config.dump());
    const auto r = run_cli("validate --config " + quote((dir.path() / "c.json").string()));
    CHECK(r.exit == 2);
    CHECK(r.err.find("paralellism") != std::string::npos);
  }
  SUBCASE("bad flag value") {
    const auto r = run_cli("run " + config_arg() + " --zero-policy sometimes");
    CHECK(r.exit == 2);
  }
  SUBCASE("missing subcommand") {
    CHECK(run_cli("").exit == 2);
  }
}

TEST_CASE("replay runs reproduce the golden output") {
  TempDir dir;
  const auto start = std::chrono::steady_clock::now();
  int run = 0;
  for (int parallelism : {1, 8}) {
    for (int i = 0; i < 3; ++i) {
      const fs::path out = dir.path() / ("run" + std::to_string(run++));
      const auto r = run_cli("run " + config_arg() + " --parallelism " + std::to_string(parallelism) + " --output " +
                             quote(out.string()));
      REQUIRE_MESSAGE(r.exit == 0, r.err);
      const auto diff = tree_diff(kE2e / "golden", out);
      CHECK_MESSAGE(diff.empty(), (diff.empty() ? std::string() : diff.front()));
    }
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("6 replay runs in " << seconds << " s");
  CHECK(seconds < 10.0);
}

TEST_CASE("a prompt subset yields only the selected models") {
  TempDir dir;
  const auto r = run_cli("run " + config_arg() + " --prompts P6N --output " + quote((dir.path() / "out").string()));
  REQUIRE_MESSAGE(r.exit == 0, r.err);
  const json report = json::parse(slurp(dir.path() / "out" / "report.json"));
  REQUIRE(report["models"].size() == 1);
  CHECK(report["models"][0]["id"] == "P6N");
}

TEST_CASE("the zero policy flag changes the configured DA column") {
  TempDir dir;
  const auto a = run_cli("run " + config_arg() + " --output " + quote((dir.path() / "a").string()));
  const auto b =
      run_cli("run " + config_arg() + " --zero-policy count_wrong --output " + quote((dir.path() / "b").string()));
  REQUIRE(a.exit == 0);
  REQUIRE(b.exit == 0);
  const json ra = json::parse(slurp(dir.path() / "a" / "report.json"));
  const json rb = json::parse(slurp(dir.path() / "b" / "report.json"));
  CHECK(ra["settings"]["zero_policy"] == "exclude");
  CHECK(rb["settings"]["zero_policy"] == "count_wrong");
  CHECK(slurp(dir.path() / "a" / "tables" / "da_class.csv") !=
        slurp(dir.path() / "b" / "tables" / "da_class.csv"));
}

TEST_CASE("live backend without an API key fails before writing output") {
  TempDir dir;
  json config = portable_config();
  config["backend"]["api_key_env"] = "FXBENCH_TEST_KEY_THAT_IS_NOT_SET";
  write_file(dir.path() / "c.json", config.dump());
  const fs::path out = dir.path() / "out";
  const auto r = run_cli("run --config " + quote((dir.path() / "c.json").string()) + " --backend live --output " +
                         quote(out.string()));
  CHECK(r.exit == 3);
  CHECK(r.err.find("FXBENCH_TEST_KEY_THAT_IS_NOT_SET") != std::string::npos);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("report prints the stored tables") {
  const auto text = run_cli("report " + quote((kE2e / "golden").string()));
  CHECK(text.exit == 0);
  CHECK(text.out == slurp(kE2e / "golden" / "tables.txt"));
  const auto as_json = run_cli("report " + quote((kE2e / "golden").string()) + " --json");
  CHECK(as_json.exit == 0);
  CHECK(json::parse(as_json.out) == json::parse(slurp(kE2e / "golden" / "report.json")));

  TempDir empty;
  CHECK(run_cli("report " + quote(empty.path().string())).exit == 4);
}

TEST_CASE("record captures a fixture from a live endpoint") {
  const fxbench::Fixture golden = fxbench::Fixture::load((kE2e / "fixture.json").string());
  fxbench::testing::FixtureChatServer server(golden);
  setenv("FXBENCH_TEST_KEY", "sk-test", 1);

  TempDir dir;
  json config = portable_config();
  config["backend"] = {{"kind", "replay"},
                       {"model", "gpt-3.5-turbo"},
                       {"fixture", (dir.path() / "recorded.json").string()},
                       {"base_url", server.base_url()},
                       {"api_key_env", "FXBENCH_TEST_KEY"},
                       {"base_backoff_ms", 1}};
  write_file(dir.path() / "c.json", config.dump());
  const auto r = run_cli("record --config " + quote((dir.path() / "c.json").string()) + " --parallelism 3");
  REQUIRE_MESSAGE(r.exit == 0, r.err);

  const auto recorded = fxbench::Fixture::load((dir.path() / "recorded.json").string());
  CHECK(recorded.size() == golden.size());
  std::size_t scripted = 0;
  for (const auto& [hash, entry] : golden.entries()) {
    scripted += entry.fail_first.size();
    fxbench::FixtureEntry expected = entry;
    expected.fail_first.clear();
    const auto* got = recorded.find(hash);
    REQUIRE_MESSAGE(got != nullptr, hash);
    CHECK(*got == expected);
  }
  CHECK(server.scripted_failures() == static_cast<int>(scripted));
  CHECK(server.hits() == static_cast<int>(golden.size() + scripted));

  // A replay of the recording scores exactly like the checked-in fixture.
  const auto replay = run_cli("run --config " + quote((dir.path() / "c.json").string()) + " --output " +
                              quote((dir.path() / "out").string()));
  REQUIRE_MESSAGE(replay.exit == 0, replay.err);
  const json a = json::parse(slurp(dir.path() / "out" / "report.json"));
  const json b = json::parse(slurp(kE2e / "golden" / "report.json"));
  CHECK(a["models"] == b["models"]);
}

TEST_CASE("the e2e generator reproduces the checked-in inputs") {
  TempDir dir;
  for (const char* name : {"config.json", "corpus.csv"}) fs::copy_file(kE2e / name, dir.path() / name);
  fs::copy(kE2e / "market", dir.path() / "market", fs::copy_options::recursive);
  const auto r = run_program(FXBENCH_MAKE_E2E, quote((dir.path() / "config.json").string()));
  REQUIRE_MESSAGE(r.exit == 0, r.err);
  CHECK(slurp(dir.path() / "fixture.json") == slurp(kE2e / "fixture.json"));
  CHECK(slurp(dir.path() / "finbert_probs.csv") == slurp(kE2e / "finbert_probs.csv"));
}
