#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "asepkpz/config.hpp"
#include "asepkpz/errors.hpp"
#include "asepkpz/experiment.hpp"

using namespace asepkpz;
namespace fs = std::filesystem;

namespace {

struct Proc {
  int code = -1;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("ASEPKPZ_CLI");
  return p ? p : "";
}

Proc run(const std::string& args) {
  REQUIRE_MESSAGE(!cli().empty(), "ASEPKPZ_CLI not set");
  Proc r;
  const std::string cmd = "\"" + cli() + "\" " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  REQUIRE(f != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, f)) r.out += buf;
  const int st = pclose(f);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("asepkpz_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

fs::path only_run_dir(const fs::path& out) {
  fs::path found;
  int n = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    if (e.is_directory()) {
      found = e.path();
      ++n;
    }
  }
  REQUIRE(n == 1);
  return found;
}

nlohmann::json manifest(const fs::path& run_dir) {
  std::ifstream in(run_dir / "manifest.json");
  REQUIRE(in);
  return nlohmann::json::parse(in);
}

std::map<std::string, std::string> csv_hashes(const nlohmann::json& m) {
  std::map<std::string, std::string> h;
  for (const auto& f : m.at("files")) {
    const std::string path = f.at("path");
    if (path.ends_with(".csv")) h[path] = f.at("sha256");
  }
  return h;
}

constexpr const char* kSmallSimulate =
    "[run]\nseed = 7\n[model]\nn_sites = 16\n[simulate]\nreplicas = 200\nT_grid = 0.1\n";

}  // namespace

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config hash: stable and sensitive to kind and values") {
  const RunConfig a;
  RunConfig b;
  CHECK(config_hash("simulate", a) == config_hash("simulate", b));
  CHECK(config_hash("simulate", a) != config_hash("kernel", a));
  b.seed = 2;
  CHECK(config_hash("simulate", a) != config_hash("simulate", b));
  CHECK(config_hash("simulate", a).size() == 64);
}

TEST_CASE("defaults round-trip through the printed config") {
  const fs::path dir = scratch("defaults");
  const fs::path p = write_file(dir / "d.ini", default_config_text());
  const RunConfig loaded = load_config(p.string());
  CHECK(config_hash("compare", loaded) == config_hash("compare", RunConfig{}));
}

TEST_CASE("bad configs raise ConfigError") {
  const fs::path dir = scratch("badcfg");
  CHECK_THROWS_AS(load_config(write_file(dir / "a.ini", "[simulate]\nreplicas = 0\n").string()), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir / "b.ini", "[simulate]\nnot_a_key = 3\n").string()), ConfigError);
  CHECK_THROWS_AS(load_config(write_file(dir / "c.ini", "[model]\nn_sites = many\n").string()), ConfigError);
  CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ConfigError);
}

TEST_CASE("library runs: rerun guard and manifest inventory") {
  const fs::path out = scratch("lib");
  RunOptions opt;
  opt.kind = "params";
  opt.out_dir = out.string();
  const RunResult r = run_experiment(RunConfig{}, opt);
  CHECK(r.pass());
  CHECK(r.exit_code() == 0);
  CHECK(r.complete);
  CHECK(fs::path(r.run_dir).filename().string() == "params-" + r.config_hash.substr(0, 16));
  for (const auto& f : r.files) CHECK(sha256_file((fs::path(r.run_dir) / f.path).string()) == f.sha256);
  CHECK_THROWS_AS(run_experiment(RunConfig{}, opt), ConfigError);
  opt.force = true;
  CHECK(run_experiment(RunConfig{}, opt).pass());
}

TEST_CASE("cli: binary is available") {
  REQUIRE_MESSAGE(!cli().empty(), "ASEPKPZ_CLI not set");
  REQUIRE(fs::exists(cli()));
  const Proc v = run("--version");
  CHECK(v.code == 0);
  CHECK(v.out.find(tool_version()) != std::string::npos);
}

TEST_CASE("cli: config --print-defaults and --check") {
  const Proc p = run("config --print-defaults");
  CHECK(p.code == 0);
  for (const char* section : {"[run]", "[model]", "[simulate]", "[kernel]", "[identities]", "[she]", "[compare]"}) {
    CHECK(p.out.find(section) != std::string::npos);
  }
  const fs::path dir = scratch("check");
  CHECK(run("config --check " + write_file(dir / "ok.ini", p.out).string()).code == 0);
  CHECK(run("config --check " + write_file(dir / "bad.ini", "[simulate]\nreplicas = 0\n").string()).code == 2);
  CHECK(run("config").code == 2);
  CHECK(run("no-such-kind").code == 2);
}

TEST_CASE("cli: invalid config exits 2 without creating a run directory") {
  const fs::path dir = scratch("invalid");
  const fs::path cfg = write_file(dir / "bad.ini", "[simulate]\nreplicas = 0\n");
  const Proc p = run("simulate --config " + cfg.string() + " --out " + (dir / "runs").string());
  CHECK(p.code == 2);
  const bool no_run_dir = !fs::exists(dir / "runs") || fs::is_empty(dir / "runs");
  CHECK(no_run_dir);
  CHECK(run("params --threads 0 --out " + (dir / "runs").string()).code == 2);
}

TEST_CASE("cli: identities passes, rerun guard exits 2, --force reruns") {
  const fs::path out = scratch("identities");
  const std::string args = "identities --out " + out.string();
  const Proc first = run(args);
  INFO(first.out);
  CHECK(first.code == 0);
  CHECK(first.out.find("PASS identities.key_spectral") != std::string::npos);
  CHECK(first.out.find("FAIL") == std::string::npos);
  const Proc again = run(args);
  CHECK(again.code == 2);
  CHECK(run(args + " --force").code == 0);
}

TEST_CASE("cli: manifest fields") {
  const fs::path out = scratch("manifest");
  REQUIRE(run("kernel --seed 3 --out " + out.string()).code == 0);
  const fs::path dir = only_run_dir(out);
  const nlohmann::json m = manifest(dir);
  for (const char* key : {"tool", "version", "kind", "config_hash", "config", "threads", "started_utc", "wall_seconds",
                          "complete", "pass", "checks", "files"}) {
    CHECK_MESSAGE(m.contains(key), key);
  }
  CHECK(m.at("kind") == "kernel");
  CHECK(m.at("complete") == true);
  CHECK(m.at("pass") == true);
  CHECK(m.at("config").at("run").at("seed") == "3");
  const std::string hash = m.at("config_hash");
  CHECK(dir.filename().string() == "kernel-" + hash.substr(0, 16));
  REQUIRE(!m.at("files").empty());
  for (const auto& f : m.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    CHECK(fs::exists(p));
    CHECK(sha256_file(p.string()) == f.at("sha256"));
    CHECK(fs::file_size(p) == f.at("bytes").get<std::uintmax_t>());
  }
  for (const auto& c : m.at("checks")) CHECK(c.at("name").get<std::string>().starts_with("kernel."));
}

TEST_CASE("cli: simulate CSVs are identical across thread counts") {
  const fs::path dir = scratch("threads");
  const fs::path cfg = write_file(dir / "small.ini", kSmallSimulate);
  for (int t : {1, 3}) {
    const Proc p = run("simulate --config " + cfg.string() + " --threads " + std::to_string(t) + " --out " +
                       (dir / ("t" + std::to_string(t))).string());
    INFO(p.out);
    CHECK((p.code == 0 || p.code == 1));
  }
  const fs::path d1 = only_run_dir(dir / "t1"), d3 = only_run_dir(dir / "t3");
  CHECK(d1.filename() == d3.filename());
  const auto h1 = csv_hashes(manifest(d1)), h3 = csv_hashes(manifest(d3));
  CHECK(!h1.empty());
  CHECK(h1 == h3);
  CHECK(manifest(d3).at("threads") == 3);
}

TEST_CASE("cli: audit-all runs every kind and passes") {
  const fs::path out = scratch("audit");
  const Proc p = run("audit-all --out " + out.string());
  INFO(p.out);
  CHECK(p.code == 0);
  for (const auto& kind : run_kinds()) {
    if (kind == "audit-all") continue;
    CHECK(p.out.find("PASS " + kind + ".") != std::string::npos);
  }
}
