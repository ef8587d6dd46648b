#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "asepkpz/config.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/experiment.hpp"
#include "asepkpz/parallel.hpp"

namespace {

constexpr int kExitPass = 0, kExitFail = 1, kExitConfig = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace asepkpz;

  CLI::App app{"Open ASEP and Robin SHE experiment runner", "asepkpz"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs";
  std::optional<std::uint64_t> seed;
  bool force = false;
  int threads = 0;

  for (const auto& kind : run_kinds()) {
    auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
    sub->add_option("--config", config_path, "INI config file (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out_dir, "parent directory of run directories")->capture_default_str();
    sub->add_flag("--force", force, "rerun into an existing run directory");
    sub->add_option("--threads", threads, "worker threads (fallback ASEPKPZ_THREADS, then 1)")
        ->check(CLI::PositiveNumber);
  }
  bool print_defaults = false;
  std::string check_path;
  auto* cfg_cmd = app.add_subcommand("config", "inspect configuration");
  cfg_cmd->add_flag("--print-defaults", print_defaults, "print the annotated default config");
  cfg_cmd->add_option("--check", check_path, "validate a config file and report every problem");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (cfg_cmd->parsed()) {
      if (print_defaults) {
        std::cout << default_config_text();
        return kExitPass;
      }
      if (!check_path.empty()) {
        (void)load_config(check_path);
        std::cout << check_path << ": ok\n";
        return kExitPass;
      }
      std::cerr << "config: pass --print-defaults or --check FILE\n";
      return kExitConfig;
    }

    RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) cfg.seed = *seed;
    RunOptions opt;
    opt.kind = app.get_subcommands().front()->get_name();
    opt.out_dir = out_dir;
    opt.force = force;
    opt.threads = resolve_threads(threads);

    const RunResult res = run_experiment(cfg, opt);
    for (const auto& c : res.checks) {
      std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    }
    std::cout << "run directory: " << res.run_dir << '\n';
    if (!res.error.empty()) std::cerr << "run aborted: " << res.error << '\n';
    return res.pass() ? kExitPass : kExitFail;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
}
