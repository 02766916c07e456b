// faktlab command line. Talks to the library only through faktlab.h.

#include <cstdio>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "faktlab/faktlab.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitStage = 1;
constexpr int kExitConfig = 2;

int exit_code(faktlab_status s) {
  if (s == FAKTLAB_OK) return kExitOk;
  return s == FAKTLAB_E_CONFIG ? kExitConfig : kExitStage;
}

int report(faktlab_status s) {
  if (s != FAKTLAB_OK)
    std::fprintf(stderr, "faktlab: %s: %s\n", faktlab_status_name(s), faktlab_last_error());
  return exit_code(s);
}

struct ConfigHandle {
  faktlab_config* ptr = nullptr;
  ~ConfigHandle() { faktlab_config_free(ptr); }
};

void print_and_free(char* s) {
  if (!s) return;
  std::printf("%s\n", s);
  faktlab_string_free(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"faktlab: factuality alignment lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  app.add_option("--config", config_path, "Config file (JSON)");
  app.add_option("--seed", seed, "Master seed, overrides the config");
  app.add_option("--out", out, "Output directory")->capture_default_str();

  auto* world_gen = app.add_subcommand("world-gen", "Knowledge base, corpus and query sets");
  auto* pretrain = app.add_subcommand("pretrain", "Pretrain the base model on the corpus");
  auto* prefs = app.add_subcommand("prefs-build", "General preference dataset");
  auto* apeft = app.add_subcommand("apeft-build", "Atomic preferences from knowledge detection");
  auto* randqa = app.add_subcommand("randqa-build", "Size-matched random QA preferences");

  auto* tune = app.add_subcommand("tune", "Preference tuning of one loss on one arm");
  std::string loss = "dpo", arm = "general";
  tune->add_option("--loss", loss, "dpo, ipo, kto, cpo or rso")->capture_default_str();
  tune->add_option("--arm", arm, "general, rand or atom")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluate vanilla or a tuned run");
  std::string model = "vanilla";
  eval->add_option("--model", model, "vanilla or a run name such as dpo_atom")->capture_default_str();

  auto* shift = app.add_subcommand("token-shift", "Token shift analysis and diagnosis");
  auto* sweep_q = app.add_subcommand("sweep-quantity", "Nested data quantity sweep");
  auto* sweep_l = app.add_subcommand("sweep-quality", "Quality level sweep");
  auto* rep = app.add_subcommand("report", "Tables, report and manifest");
  auto* run = app.add_subcommand("run", "Every stage in order");
  auto* show = app.add_subcommand("config", "Print the effective config");

  auto* replay = app.add_subcommand("replay", "Re-run a manifest and compare digests");
  std::string manifest;
  replay->add_option("manifest", manifest, "manifest.json of a finished run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*replay) {
    int identical = 0;
    char* mismatches = nullptr;
    auto s = faktlab_replay(manifest.c_str(), out.c_str(), &identical, &mismatches);
    if (s != FAKTLAB_OK) return report(s);
    std::printf("replay %s\n", identical ? "identical" : "differs");
    if (!identical) print_and_free(mismatches);
    else faktlab_string_free(mismatches);
    return identical ? kExitOk : kExitStage;
  }

  ConfigHandle cfg;
  auto s = config_path.empty() ? faktlab_config_default(&cfg.ptr)
                               : faktlab_config_load(config_path.c_str(), &cfg.ptr);
  if (s != FAKTLAB_OK) return report(s);
  if (seed) faktlab_config_set_seed(cfg.ptr, *seed);

  const char* dir = out.c_str();
  if (*show) {
    char* json = nullptr;
    s = faktlab_config_to_json(cfg.ptr, &json);
    print_and_free(json);
  } else if (*world_gen) {
    s = faktlab_world_gen(cfg.ptr, dir);
  } else if (*pretrain) {
    s = faktlab_pretrain(cfg.ptr, dir);
  } else if (*prefs) {
    s = faktlab_prefs_build(cfg.ptr, dir);
  } else if (*apeft) {
    s = faktlab_apeft_build(cfg.ptr, dir);
  } else if (*randqa) {
    s = faktlab_randqa_build(cfg.ptr, dir);
  } else if (*tune) {
    s = faktlab_tune(cfg.ptr, dir, loss.c_str(), arm.c_str());
  } else if (*eval) {
    char* json = nullptr;
    s = faktlab_eval(cfg.ptr, dir, model.c_str(), &json);
    print_and_free(json);
  } else if (*shift) {
    char* summary = nullptr;
    s = faktlab_token_shift(cfg.ptr, dir, &summary);
    print_and_free(summary);
  } else if (*sweep_q) {
    s = faktlab_sweep_quantity(cfg.ptr, dir);
  } else if (*sweep_l) {
    s = faktlab_sweep_quality(cfg.ptr, dir);
  } else if (*rep) {
    s = faktlab_report(cfg.ptr, dir);
  } else if (*run) {
    s = faktlab_run(cfg.ptr, dir);
  }
  return report(s);
}
