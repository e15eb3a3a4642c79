// Command-line front end over the qlab C API.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qlab/qlab.h"

namespace {

int report_error(qlab_status s) {
  std::fprintf(stderr, "qlab: %s: %s\n", qlab_status_string(s), qlab_last_error());
  return 2;
}

struct Options {
  std::string config;
  std::string out;
  std::string claim;
  std::vector<std::string> sets;
  uint64_t seed = 0;
  int64_t workers = 0;
};

// Applies command-line flags on top of the loaded configuration.
qlab_status build_config(const Options& o, const CLI::App& sub, const char* kind,
                         qlab_config** cfg) {
  qlab_status s = o.config.empty() ? qlab_config_default(cfg)
                                   : qlab_config_load(o.config.c_str(), cfg);
  if (s != QLAB_OK) return s;
  auto set = [&](const char* section, const char* key, const std::string& value) {
    return qlab_config_set(*cfg, section, key, value.c_str());
  };
  if ((s = set("experiment", "kind", kind)) != QLAB_OK) return s;
  if (sub.count("--seed") && (s = set("experiment", "seed", std::to_string(o.seed))) != QLAB_OK)
    return s;
  if (sub.count("--workers") &&
      (s = set("experiment", "workers", std::to_string(o.workers))) != QLAB_OK)
    return s;
  if (!o.out.empty() && (s = set("experiment", "out", o.out)) != QLAB_OK) return s;
  for (const auto& kv : o.sets) {
    const auto dot = kv.find('.');
    const auto eq = kv.find('=');
    if (dot == std::string::npos || eq == std::string::npos || eq < dot) {
      std::fprintf(stderr, "qlab: --set expects section.key=value, got %s\n", kv.c_str());
      return QLAB_INVALID_ARGUMENT;
    }
    s = qlab_config_set(*cfg, kv.substr(0, dot).c_str(),
                        kv.substr(dot + 1, eq - dot - 1).c_str(),
                        kv.substr(eq + 1).c_str());
    if (s != QLAB_OK) return s;
  }
  return QLAB_OK;
}

std::string out_dir(const qlab_config* cfg) {
  size_t needed = 0;
  qlab_config_serialize(cfg, nullptr, 0, &needed);
  std::string text(needed, '\0');
  qlab_config_serialize(cfg, text.data(), needed, &needed);
  const auto pos = text.find("\nout = ");
  if (pos == std::string::npos) return "out";
  const auto end = text.find('\n', pos + 1);
  return text.substr(pos + 7, end - pos - 7);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qlab: matrix-vector query lower-bound laboratory"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qlab_version()));
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "configuration file");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.sets, "override, e.g. verify.stieltjes.n=30");
  };
  CLI::App* gen = app.add_subcommand("gen", "generate instances");
  CLI::App* sweep = app.add_subcommand("sweep", "queries-to-success sweep");
  CLI::App* verify = app.add_subcommand("verify", "run the verification suite");
  CLI::App* report = app.add_subcommand("report", "render CSV tables to markdown");
  for (CLI::App* sub : {gen, sweep, verify, report}) add_common(sub);
  verify->add_option("--claim", o.claim, "run a single claim");

  CLI11_PARSE(app, argc, argv);

  CLI::App* sub = app.get_subcommands().front();
  qlab_config* cfg = nullptr;
  qlab_status s = build_config(o, *sub, sub->get_name().c_str(), &cfg);
  if (s != QLAB_OK) {
    qlab_config_destroy(cfg);
    return report_error(s);
  }
  const std::string dir = out_dir(cfg);
  int exit_code = 0;
  if (sub == gen) {
    s = qlab_run_gen(cfg, dir.c_str());
  } else if (sub == sweep) {
    s = qlab_run_sweep(cfg, dir.c_str());
  } else if (sub == verify) {
    int failed = 0;
    s = qlab_run_verify(cfg, o.claim.c_str(), dir.c_str(), &failed);
    if (s == QLAB_OK) {
      std::printf("verify: %d hard failure(s); summary in %s/summary.csv\n", failed,
                  dir.c_str());
      if (failed > 0) exit_code = 1;
    }
  } else {
    s = qlab_run_report(cfg, dir.c_str());
    if (s == QLAB_OK) std::printf("report written to %s/report.md\n", dir.c_str());
  }
  qlab_config_destroy(cfg);
  if (s != QLAB_OK) return report_error(s);
  return exit_code;
}
