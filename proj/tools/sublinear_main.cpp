// SPDX-License-Identifier: Apache-2.0
// sublinear <subcommand> [--config file] [--out dir] [--set key=value]...

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sublinear/cli.hpp"

namespace {

const char* blurb(const std::string& name) {
  if (name == "simulate") return "run the quantile minimizing-movement scheme";
  if (name == "steady") return "critical mass, level and minimizer";
  if (name == "critical-mass") return "critical mass only";
  if (name == "compare") return "quantile scheme vs finite volumes under refinement";
  if (name == "flow") return "characteristic flow of -V'";
  if (name == "check-stationary") return "classify a measure read from file";
  return "";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sublinear drift-diffusion toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  for (const auto& [name, fn] : sublinear::cli::subcommands()) {
    (void)fn;
    auto* sub = app.add_subcommand(name, blurb(name));
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--set", overrides, "override key=value (repeatable)")->take_all();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : sublinear::cli::kExitInput;
  }
  sublinear::cli::RunContext ctx;
  ctx.out_dir = out_dir;
  try {
    if (!config_path.empty()) ctx.config = sublinear::RunConfig::load(config_path);
    for (const auto& kv : overrides) ctx.config.set_override(kv);
  } catch (const sublinear::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return sublinear::cli::kExitInput;
  }
  return sublinear::cli::dispatch(app.get_subcommands().front()->get_name(), ctx);
}
