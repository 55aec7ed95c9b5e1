// fxbench: benchmark LLM prompts for forex headline sentiment.
//
//   fxbench validate --config run.json
//   fxbench record   --config run.json [--prompts P1,P6N] [--fixture out.json]
//   fxbench run      --config run.json [--backend replay] [--output dir]
//   fxbench report   <run dir> [--json]
//
// Exit codes: 0 success, 2 invalid configuration or arguments, 3 fatal
// backend failure, 4 file or data error.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fxbench/config.hpp"
#include "fxbench/error.hpp"
#include "fxbench/fixture.hpp"
#include "fxbench/live_backend.hpp"
#include "fxbench/pipeline.hpp"

namespace {

using namespace fxbench;

enum Exit : int { kOk = 0, kInvalid = 2, kBackend = 3, kIo = 4 };

struct Overrides {
  std::string config;
  std::optional<std::string> prompts;
  std::optional<std::string> backend;
  std::optional<int> parallelism;
  std::optional<std::string> zero_policy;
  std::optional<std::string> output;
  std::optional<std::string> fixture;
};

void add_config_flags(CLI::App* cmd, Overrides& o, bool run_flags) {
  cmd->add_option("--config", o.config, "run configuration (JSON)")->required();
  cmd->add_option("--prompts", o.prompts, "comma-separated template ids, e.g. P1,P6N");
  cmd->add_option("--backend", o.backend, "replay or live");
  cmd->add_option("--parallelism", o.parallelism, "requests in flight");
  if (run_flags) {
    cmd->add_option("--zero-policy", o.zero_policy, "exclude, count_wrong or count_half");
    cmd->add_option("--output", o.output, "output directory");
  }
}

RunConfig load_with_overrides(const Overrides& o) {
  RunConfig config = load_run_config(o.config);
  if (o.prompts) config.prompts = split_list(*o.prompts);
  if (o.backend) {
    auto kind = backend_kind_from_string(*o.backend);
    if (!kind) throw ConfigError("--backend: expected replay or live, got '" + *o.backend + "'");
    config.backend.kind = *kind;
  }
  if (o.parallelism) config.parallelism = *o.parallelism;
  if (o.zero_policy) {
    auto policy = zero_policy_from_string(*o.zero_policy);
    if (!policy) throw ConfigError("--zero-policy: expected exclude, count_wrong or count_half");
    config.zero_policy = *policy;
  }
  // Paths given on the command line are relative to the working directory.
  if (o.output) config.output = std::filesystem::absolute(*o.output).string();
  if (o.fixture) config.backend.fixture = std::filesystem::absolute(*o.fixture).string();
  return config;
}

bool report_diagnostics(const RunConfig& config) {
  const auto diagnostics = validate_config(config);
  for (const auto& d : diagnostics) std::cerr << "config: " << d.field << ": " << d.message << '\n';
  return diagnostics.empty();
}

int cmd_validate(const Overrides& o) {
  const RunConfig config = load_with_overrides(o);
  if (!report_diagnostics(config)) return kInvalid;
  std::cout << "ok\n";
  return kOk;
}

int cmd_record(const Overrides& o) {
  RunConfig config = load_with_overrides(o);
  if (config.backend.fixture.empty()) throw ConfigError("backend.fixture: required as the recording target");
  // The fixture is an output here, so it need not exist yet.
  const auto target = config.resolve(config.backend.fixture);
  config.backend.kind = BackendKind::Live;
  if (!report_diagnostics(config)) return kInvalid;

  LiveBackend backend(config.live_config());
  const auto corpus = load_run_corpus(config).corpus;
  const auto requests = planned_requests(config, corpus);
  const Fixture fixture =
      record_fixture(backend, requests, target.string(), config.parallelism, config.retry_policy());
  std::cout << "recorded " << fixture.size() << " responses to " << target.string() << '\n';
  return kOk;
}

int cmd_run(const Overrides& o) {
  const RunConfig config = load_with_overrides(o);
  if (!report_diagnostics(config)) return kInvalid;
  auto backend = make_backend(config);
  const RunResult result = run_pipeline(config, *backend);
  const auto dir = config.resolve(config.output);
  write_run(dir, result, config);
  std::size_t failures = 0;
  for (const auto& m : result.models) {
    for (const auto& [kind, n] : m.parse_failures) failures += n;
    for (const auto& [kind, n] : m.backend_failures) failures += n;
  }
  std::cout << "wrote " << dir.string() << " (" << result.models.size() << " models, " << failures
            << " unscored replies)\n";
  return kOk;
}

int cmd_report(const std::string& dir, bool json_only) {
  std::cout << (json_only ? report_json_text(dir) : report_text(dir));
  return kOk;
}

int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kInvalid;
  if (dynamic_cast<const BackendFailure*>(&e) || dynamic_cast<const ExhaustedRetries*>(&e) ||
      dynamic_cast<const BatchAborted*>(&e)) {
    return kBackend;
  }
  return kIo;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmark LLM prompts for forex headline sentiment"};
  app.require_subcommand(1);

  Overrides validate_opts, record_opts, run_opts;
  auto* validate = app.add_subcommand("validate", "check a run configuration without network access");
  add_config_flags(validate, validate_opts, false);
  auto* record = app.add_subcommand("record", "query the live backend and save a replay fixture");
  add_config_flags(record, record_opts, false);
  record->add_option("--fixture", record_opts.fixture, "fixture file to write");
  auto* run = app.add_subcommand("run", "run the benchmark and write the report");
  add_config_flags(run, run_opts, true);

  std::string report_dir;
  bool json_only = false;
  auto* report = app.add_subcommand("report", "print the tables of a finished run");
  report->add_option("run_dir", report_dir, "directory written by `run`")->required();
  report->add_flag("--json", json_only, "print report.json instead of tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*validate) return cmd_validate(validate_opts);
    if (*record) return cmd_record(record_opts);
    if (*run) return cmd_run(run_opts);
    if (*report) return cmd_report(report_dir, json_only);
  } catch (const std::exception& e) {
    std::cerr << "fxbench: " << e.what() << '\n';
    return exit_code(e);
  }
  return kOk;
}
