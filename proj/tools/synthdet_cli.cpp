// Command-line driver for the synthdet shared library. Everything of
// substance happens behind the C API; this file only parses arguments,
// forwards them, and maps statuses to exit codes:
//   0 success, 1 usage error, 2 config validation error, 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "synthdet/synthdet.h"

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  bool has_seed = false;
  uint64_t seed = 0;
  std::string output_dir;
  int jobs = 1;
  std::string report_path;
  bool verbose = false;
};

int exit_code_for(synthdet_status status) {
  switch (status) {
    case SYNTHDET_OK:
      return 0;
    case SYNTHDET_ERR_CONFIG:
      return 2;
    default:
      return 3;
  }
}

int fail(synthdet_status status) {
  std::fprintf(stderr, "synthdet: %s: %s\n", synthdet_status_name(status),
               synthdet_last_error());
  return exit_code_for(status);
}

// Loads the config and applies --set/--seed/--output before any work runs.
int load_config(const CommonArgs& args, synthdet_config** out) {
  synthdet_status s = synthdet_config_load(args.config_path.c_str(), out);
  if (s != SYNTHDET_OK) return fail(s);
  for (const auto& kv : args.overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "synthdet: --set expects key=value, got '%s'\n",
                   kv.c_str());
      synthdet_config_free(*out);
      return 1;
    }
    s = synthdet_config_override(*out, kv.substr(0, eq).c_str(),
                                 kv.substr(eq + 1).c_str());
    if (s != SYNTHDET_OK) {
      int code = fail(s);
      synthdet_config_free(*out);
      return code;
    }
  }
  if (args.has_seed) {
    s = synthdet_config_set_seed(*out, args.seed);
    if (s != SYNTHDET_OK) {
      int code = fail(s);
      synthdet_config_free(*out);
      return code;
    }
  }
  if (!args.output_dir.empty()) {
    s = synthdet_config_set_output_dir(*out, args.output_dir.c_str());
    if (s != SYNTHDET_OK) {
      int code = fail(s);
      synthdet_config_free(*out);
      return code;
    }
  }
  return 0;
}

int emit_report(const CommonArgs& args, synthdet_report* report) {
  std::fputs(synthdet_report_text(report), stdout);
  int code = 0;
  if (!args.report_path.empty()) {
    synthdet_status s =
        synthdet_report_write_json(report, args.report_path.c_str());
    if (s != SYNTHDET_OK) code = fail(s);
  }
  synthdet_report_free(report);
  return code;
}

void add_common_flags(CLI::App* cmd, CommonArgs* args, bool with_config) {
  if (with_config)
    cmd->add_option("--config", args->config_path, "config file (JSON)")
        ->required();
  cmd->add_option("--set", args->overrides,
                  "override a config value: dotted.key=json");
  cmd->add_option("--seed", args->seed, "override generation.master_seed")
      ->each([args](const std::string&) { args->has_seed = true; });
  cmd->add_option("--jobs", args->jobs, "worker threads (outputs unaffected)");
  cmd->add_option("--report", args->report_path, "write the JSON report here");
  cmd->add_flag("-v,--verbose", args->verbose, "chatty progress output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic detection dataset toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CommonArgs args;

  CLI::App* generate = app.add_subcommand(
      "generate", "render and composite a labeled dataset");
  add_common_flags(generate, &args, true);
  generate->add_option("--output", args.output_dir,
                       "override generation.output_dir");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "score detections against ground truth");
  std::string gt_path, det_path;
  evaluate->add_option("--gt", gt_path, "ground truth annotations.json")
      ->required();
  evaluate->add_option("--dets", det_path, "detections JSON array")->required();
  evaluate->add_option("--report", args.report_path,
                       "write the JSON report here");

  CLI::App* exp_freeze = app.add_subcommand(
      "experiment-freeze", "train under the configured freeze schedules");
  add_common_flags(exp_freeze, &args, true);

  CLI::App* exp_distance = app.add_subcommand(
      "experiment-distance",
      "feature-distance histograms for frozen vs finetuned extractors");
  add_common_flags(exp_distance, &args, true);

  CLI::App* ablate = app.add_subcommand(
      "ablate", "sweep the pipeline toggle matrix (16 combinations)");
  add_common_flags(ablate, &args, true);

  CLI::App* inspect = app.add_subcommand(
      "inspect", "print the resolved config and pose-grid statistics");
  add_common_flags(inspect, &args, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    app.exit(e);
    return 1;
  }

  if (evaluate->parsed()) {
    synthdet_report* report = nullptr;
    synthdet_status s =
        synthdet_evaluate(gt_path.c_str(), det_path.c_str(), &report);
    if (s != SYNTHDET_OK) return fail(s);
    return emit_report(args, report);
  }

  synthdet_config* config = nullptr;
  if (int code = load_config(args, &config)) return code;

  synthdet_report* report = nullptr;
  synthdet_status s = SYNTHDET_OK;
  if (generate->parsed()) {
    s = synthdet_generate(config, args.jobs, &report);
  } else if (exp_freeze->parsed()) {
    s = synthdet_experiment_freeze(config, args.jobs, &report);
  } else if (exp_distance->parsed()) {
    s = synthdet_experiment_distance(config, args.jobs, &report);
  } else if (ablate->parsed()) {
    s = synthdet_ablate(config, args.jobs, &report);
  } else if (inspect->parsed()) {
    s = synthdet_inspect(config, &report);
  }
  int code = s == SYNTHDET_OK ? 0 : fail(s);
  if (report && code == 0) code = emit_report(args, report);
  synthdet_config_free(config);
  return code;
}
