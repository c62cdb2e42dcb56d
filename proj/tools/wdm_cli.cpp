#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wdm/sweep.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dependency-measure experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir_override, seeds_override;
  bool dry_run = false;
  int threads = 0;
  auto* run = app.add_subcommand("run-sweep", "Run every cell of a sweep config");
  run->add_option("config", config_path, "JSON sweep config")->required();
  run->add_option("--out-dir", out_dir_override, "Override the configured output directory");
  run->add_option("--seeds", seeds_override, "Comma-separated seed override");
  run->add_option("--threads", threads, "Worker threads (default: hardware concurrency)");
  run->add_flag("--dry-run", dry_run, "Validate and print the resolved plan only");

  std::vector<std::string> csv_paths;
  std::string report_out = ".";
  auto* rep = app.add_subcommand("report", "Aggregate sweep CSVs into a summary");
  rep->add_option("csv", csv_paths, "Sweep result CSV files")->required();
  rep->add_option("--out-dir", report_out, "Directory for report.md and plots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      wdm::SweepConfig config = wdm::sweep_config_from_file(config_path);
      if (!out_dir_override.empty()) config.out_dir = out_dir_override;
      if (!seeds_override.empty()) {
        config.seeds.clear();
        std::string tok;
        for (size_t i = 0; i <= seeds_override.size(); ++i) {
          if (i == seeds_override.size() || seeds_override[i] == ',') {
            if (!tok.empty()) config.seeds.push_back(std::stoull(tok));
            tok.clear();
          } else {
            tok += seeds_override[i];
          }
        }
        config.validate();
      }
      if (dry_run) {
        std::printf("%s\n", wdm::sweep_config_to_json(config).dump(2).c_str());
        size_t cells = config.axis_values.size() * config.objectives.size() *
                       config.seeds.size();
        std::printf("plan: %zu cells -> %s/results.csv\n", cells, config.out_dir.c_str());
        return 0;
      }
      return wdm::run_sweep(config, threads);
    }
    std::vector<std::filesystem::path> paths(csv_paths.begin(), csv_paths.end());
    return wdm::report(paths, report_out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
