// Batch front-end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <string>

#include "perfhom/perfhom.h"

namespace {

int fail_with(ph_status s, const char* what) {
  std::fprintf(stderr, "perfhom: %s: %s: %s\n", what, ph_status_string(s), ph_last_error());
  return ph_status_exit_code(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homogenization experiments on perforated domains"};
  std::string command, config_path, out_dir;
  int jobs = 0;
  bool self_test = false;
  app.add_option("command", command, "geometry-check | corrector | study | poincare | all")
      ->required()
      ->check(CLI::IsMember({"geometry-check", "corrector", "study", "poincare", "all"}));
  app.add_option("--config", config_path, "experiment config (key = value sections)");
  app.add_option("--out", out_dir, "output directory, overrides [run] output");
  app.add_option("--jobs", jobs, "concurrent eps runs, overrides [run] jobs")->check(CLI::Range(1, 64));
  app.add_flag("--self-test", self_test, "study: fit synthetic eps^2 data instead of solving");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  ph_command cmd{};
  if (ph_status s = ph_command_parse(command.c_str(), &cmd); s != PH_OK) return fail_with(s, "command");

  ph_config* cfg = nullptr;
  ph_status s = config_path.empty() ? ph_config_default(&cfg) : ph_config_load(config_path.c_str(), &cfg);
  if (s != PH_OK) return fail_with(s, "config");

  ph_report* report = nullptr;
  s = ph_run(cmd, cfg, out_dir.empty() ? nullptr : out_dir.c_str(), jobs, self_test ? 1 : 0, &report);
  ph_config_free(cfg);
  if (s != PH_OK) return fail_with(s, command.c_str());

  std::fputs(ph_report_log(report), stderr);
  std::fputs(ph_report_summary(report), stdout);
  const int rc = ph_report_exit_code(report);
  ph_report_free(report);
  return rc;
}
