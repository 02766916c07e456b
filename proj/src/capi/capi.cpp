#include "faktlab/faktlab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "faktlab/error.hpp"
#include "faktlab/harness/experiment.hpp"
#include "faktlab/preflosses/losses.hpp"
#include "faktlab/tinylm/model.hpp"

struct faktlab_config {
  faktlab::harness::ExperimentConfig value;
};

struct faktlab_model {
  faktlab::tinylm::PolicyModel value;
};

namespace {

thread_local std::string g_last_error;

faktlab_status status_of(faktlab::ErrorKind k) {
  using faktlab::ErrorKind;
  switch (k) {
    case ErrorKind::InvalidArgument: return FAKTLAB_E_INVALID_ARGUMENT;
    case ErrorKind::Config: return FAKTLAB_E_CONFIG;
    case ErrorKind::Io: return FAKTLAB_E_IO;
    case ErrorKind::State: return FAKTLAB_E_STATE;
    case ErrorKind::Stage: return FAKTLAB_E_STAGE;
  }
  return FAKTLAB_E_INTERNAL;
}

template <class F>
faktlab_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return FAKTLAB_OK;
  } catch (const faktlab::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return FAKTLAB_E_INTERNAL;
}

void need(const void* p, const char* what) {
  if (!p) faktlab::fail(faktlab::ErrorKind::InvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

template <class Stage>
faktlab_status stage(const faktlab_config* c, const char* out, Stage&& run) {
  return guard([&] {
    need(c, "config");
    need(out, "out_dir");
    c->value.validate();
    const std::filesystem::path dir(out);
    run(c->value, dir);
  });
}

}  // namespace

extern "C" {

const char* faktlab_version(void) { return "0.1.0"; }

const char* faktlab_last_error(void) { return g_last_error.c_str(); }

const char* faktlab_status_name(faktlab_status s) {
  switch (s) {
    case FAKTLAB_OK: return "ok";
    case FAKTLAB_E_INVALID_ARGUMENT: return "invalid argument";
    case FAKTLAB_E_CONFIG: return "config error";
    case FAKTLAB_E_IO: return "io error";
    case FAKTLAB_E_STATE: return "state error";
    case FAKTLAB_E_STAGE: return "stage failure";
    case FAKTLAB_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void faktlab_string_free(char* s) { std::free(s); }

faktlab_status faktlab_config_default(faktlab_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new faktlab_config{faktlab::harness::ExperimentConfig::defaults()};
  });
}

faktlab_status faktlab_config_load(const char* path, faktlab_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new faktlab_config{faktlab::harness::load_config(path)};
  });
}

faktlab_status faktlab_config_from_json(const char* json, faktlab_config** out) {
  return guard([&] {
    need(json, "json");
    need(out, "out");
    faktlab::io::Json j;
    try {
      j = faktlab::io::Json::parse(json);
    } catch (const faktlab::io::Json::exception& e) {
      faktlab::fail(faktlab::ErrorKind::Config, std::string("config is not JSON: ") + e.what());
    }
    *out = new faktlab_config{faktlab::harness::config_from_json(j)};
  });
}

faktlab_status faktlab_config_to_json(const faktlab_config* c, char** json) {
  return guard([&] {
    need(c, "config");
    need(json, "json");
    *json = dup(faktlab::harness::config_to_json(c->value).dump(2));
  });
}

faktlab_status faktlab_config_set_seed(faktlab_config* c, uint64_t seed) {
  return guard([&] {
    need(c, "config");
    c->value.seed = seed;
  });
}

faktlab_status faktlab_config_get_seed(const faktlab_config* c, uint64_t* seed) {
  return guard([&] {
    need(c, "config");
    need(seed, "seed");
    *seed = c->value.seed;
  });
}

void faktlab_config_free(faktlab_config* c) { delete c; }

faktlab_status faktlab_world_gen(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("world-gen", [&] { faktlab::harness::stage_world_gen(cfg, dir); });
  });
}

faktlab_status faktlab_pretrain(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("pretrain", [&] { faktlab::harness::stage_pretrain(cfg, dir); });
  });
}

faktlab_status faktlab_prefs_build(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("prefs-build",
                                [&] { faktlab::harness::stage_prefs_build(cfg, dir); });
  });
}

faktlab_status faktlab_apeft_build(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("apeft-build",
                                [&] { faktlab::harness::stage_apeft_build(cfg, dir); });
  });
}

faktlab_status faktlab_randqa_build(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("randqa-build",
                                [&] { faktlab::harness::stage_randqa_build(cfg, dir); });
  });
}

faktlab_status faktlab_tune(const faktlab_config* c, const char* out, const char* loss,
                            const char* arm) {
  return stage(c, out, [&](auto& cfg, auto& dir) {
    need(loss, "loss");
    need(arm, "arm");
    auto kind = faktlab::preflosses::parse_loss(loss);
    auto a = faktlab::harness::parse_arm(arm);
    faktlab::harness::run_stage("tune", [&] { faktlab::harness::stage_tune(cfg, dir, kind, a); });
  });
}

faktlab_status faktlab_eval(const faktlab_config* c, const char* out, const char* model,
                            char** report_json) {
  return stage(c, out, [&](auto& cfg, auto& dir) {
    need(model, "model");
    faktlab::harness::EvalReport r;
    faktlab::harness::run_stage("eval", [&] { r = faktlab::harness::stage_eval(cfg, dir, model); });
    if (report_json) *report_json = dup(faktlab::harness::eval_report_json(r).dump(2));
  });
}

faktlab_status faktlab_token_shift(const faktlab_config* c, const char* out, char** summary) {
  return stage(c, out, [&](auto& cfg, auto& dir) {
    faktlab::tokenshift::DiagnosisReport d;
    faktlab::harness::run_stage("token-shift",
                                [&] { d = faktlab::harness::stage_token_shift(cfg, dir); });
    if (summary) *summary = dup(d.summary());
  });
}

faktlab_status faktlab_sweep_quantity(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("sweep-quantity",
                                [&] { faktlab::harness::sweep_quantity(cfg, dir); });
  });
}

faktlab_status faktlab_sweep_quality(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("sweep-quality", [&] { faktlab::harness::sweep_quality(cfg, dir); });
  });
}

faktlab_status faktlab_report(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) {
    faktlab::harness::run_stage("report", [&] {
      faktlab::harness::stage_report(cfg, dir);
      faktlab::io::write_file(dir / faktlab::harness::files::kManifest,
                              faktlab::harness::build_manifest(cfg, dir).dump(2) + "\n");
    });
  });
}

faktlab_status faktlab_run(const faktlab_config* c, const char* out) {
  return stage(c, out, [](auto& cfg, auto& dir) { faktlab::harness::run_experiment(cfg, dir); });
}

faktlab_status faktlab_replay(const char* manifest_path, const char* out, int* identical,
                              char** mismatches) {
  return guard([&] {
    need(manifest_path, "manifest_path");
    need(out, "out_dir");
    need(identical, "identical");
    auto r = faktlab::harness::replay(manifest_path, out);
    *identical = r.identical() ? 1 : 0;
    if (mismatches) *mismatches = dup(faktlab::io::Json(r.mismatched).dump());
  });
}

faktlab_status faktlab_model_load(const char* path, faktlab_model** out) {
  return guard([&] {
    need(path, "checkpoint_path");
    need(out, "out");
    *out = new faktlab_model{faktlab::tinylm::load_checkpoint(path)};
  });
}

faktlab_status faktlab_model_param_count(const faktlab_model* m, size_t* count) {
  return guard([&] {
    need(m, "model");
    need(count, "count");
    *count = m->value.params().size();
  });
}

faktlab_status faktlab_model_digest(const faktlab_model* m, char** hex) {
  return guard([&] {
    need(m, "model");
    need(hex, "hex");
    *hex = dup(faktlab::io::sha256_hex(faktlab::tinylm::serialize_checkpoint(m->value)));
  });
}

faktlab_status faktlab_model_generate(const faktlab_model* m, const char* prompt, size_t max_len,
                                      char** text) {
  return guard([&] {
    need(m, "model");
    need(prompt, "prompt");
    need(text, "text");
    const auto& vocab = m->value.vocab();
    faktlab::tinylm::SampleSpec spec;
    spec.max_len = max_len;
    auto res = faktlab::tinylm::sample(m->value, vocab.encode(prompt), spec);
    *text = dup(vocab.decode(res.tokens));
  });
}

void faktlab_model_free(faktlab_model* m) { delete m; }

}  // extern "C"
