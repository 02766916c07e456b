#include "faktlab/harness/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "faktlab/apeft/apeft.hpp"
#include "faktlab/error.hpp"
#include "faktlab/prefgen/prefgen.hpp"
#include "faktlab/rng.hpp"
#include "faktlab/world/corpus.hpp"
#include "faktlab/world/queries.hpp"

namespace faktlab::harness {

namespace {

using preflosses::LossKind;
using tinylm::PolicyModel;

constexpr Arm kArms[] = {Arm::General, Arm::RandomQa, Arm::Atomic};

bool arm_enabled(const ArmsConfig& a, Arm arm) {
  switch (arm) {
    case Arm::General: return a.general;
    case Arm::RandomQa: return a.random_qa;
    case Arm::Atomic: return a.atomic;
  }
  return false;
}

std::string fmt(double v) { return io::format_fixed(v, 6); }

PolicyModel load_model(const fs::path& path) {
  return tinylm::deserialize_checkpoint(io::read_file(path));
}

void save_model(const PolicyModel& m, const fs::path& path) {
  io::write_file(path, tinylm::serialize_checkpoint(m));
}

fs::path model_path(const fs::path& out, const std::string& name) {
  return name == "vanilla" ? out / files::kBase : out / "tuned" / (name + ".ckpt");
}

std::vector<preflosses::TokenPair> tokenize(const std::vector<prefgen::Preference>& prefs,
                                            const tinylm::Vocab& vocab) {
  std::vector<preflosses::TokenPair> out;
  out.reserve(prefs.size());
  for (const auto& p : prefs) out.push_back({vocab.encode(p.x), vocab.encode(p.y_w), vocab.encode(p.y_l)});
  return out;
}

std::vector<std::string> prompts_of(std::initializer_list<const std::vector<world::Query>*> sets) {
  std::vector<std::string> out;
  for (const auto* s : sets)
    for (const auto& q : *s) out.push_back(q.prompt);
  return out;
}

preflosses::TrainConfig train_config(const ExperimentConfig& c) {
  auto t = c.train;
  t.seed = stage_seeds(c.seed).train;
  return t;
}

preflosses::LossConfig loss_config(const ExperimentConfig& c, LossKind kind) {
  auto l = c.loss;
  l.kind = kind;
  return l;
}

EvalReport tune_and_eval(const ExperimentConfig& c, const PolicyModel& base,
                         const PolicyModel& ref, const std::vector<prefgen::Preference>& prefs,
                         LossKind kind, const world::QuerySets& q, const world::KnowledgeBase& kb) {
  auto tuned = preflosses::tune(base, ref, tokenize(prefs, base.vocab()), loss_config(c, kind),
                                train_config(c));
  return evaluate(tuned.model, q, kb, c.eval);
}

// Long CSV plus one small CSV per (loss, metric).
void write_sweep(const fs::path& out, const std::string& prefix,
                 const std::vector<std::string>& groups, const std::vector<std::size_t>& sizes,
                 const std::vector<LossKind>& losses,
                 const std::vector<std::vector<EvalReport>>& reports) {
  const auto names = metric_names();
  io::CsvWriter all({"group", "size", "loss", "metric", "value"});
  for (std::size_t li = 0; li < losses.size(); ++li) {
    const auto loss = preflosses::to_string(losses[li]);
    for (std::size_t m = 0; m < names.size(); ++m) {
      io::CsvWriter one({"group", "size", "value"});
      for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto v = fmt(metric_values(reports[g][li])[m]);
        all.row({groups[g], std::to_string(sizes[g]), loss, names[m], v});
        one.row({groups[g], std::to_string(sizes[g]), v});
      }
      one.save(out / prefix / (loss + "_" + names[m] + ".csv"));
    }
  }
  all.save(out / (prefix + ".csv"));
}

}  // namespace

std::string_view arm_name(Arm a) {
  switch (a) {
    case Arm::General: return "general";
    case Arm::RandomQa: return "rand";
    case Arm::Atomic: return "atom";
  }
  return "?";
}

Arm parse_arm(std::string_view name) {
  for (Arm a : kArms)
    if (arm_name(a) == name) return a;
  fail(ErrorKind::InvalidArgument, "unknown arm '" + std::string(name) + "'");
}

std::string run_name(LossKind loss, Arm arm) {
  return preflosses::to_string(loss) + "_" + std::string(arm_name(arm));
}

StageSeeds stage_seeds(std::uint64_t m) {
  auto s = [m](std::string_view n) { return component_seed(m, n); };
  return {s("kb"),     s("corpus"), s("split"), s("queries"), s("init"),
          s("pretrain"), s("prefs"), s("detect"), s("randqa"), s("mix"),
          s("train"),  s("quantity"), s("quality")};
}

void run_stage(std::string_view stage, const std::function<void()>& body) {
  try {
    body();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::Stage) throw;
    fail(ErrorKind::Stage, "stage " + std::string(stage) + ": " + e.what());
  } catch (const std::exception& e) {
    fail(ErrorKind::Stage, "stage " + std::string(stage) + ": " + e.what());
  }
}

void stage_world_gen(const ExperimentConfig& c, const fs::path& out) {
  const auto seeds = stage_seeds(c.seed);
  auto kb = world::gen_kb(seeds.kb, c.world.num_entities);
  auto spec = c.world;
  spec.seed = seeds.corpus;
  auto corpus = world::gen_corpus(kb, spec);
  auto pref = world::choose_preference_entities(kb, c.prefs.preference_entities, seeds.split);
  auto q = world::gen_queries(kb, pref, seeds.queries, c.queries);
  world::save_kb(kb, out / files::kKb);
  world::save_corpus(corpus, spec, out / files::kCorpus);
  world::save_queries(q, out / files::kQueries);
}

void stage_pretrain(const ExperimentConfig& c, const fs::path& out) {
  const auto seeds = stage_seeds(c.seed);
  auto kb = world::load_kb(out / files::kKb);
  auto corpus = world::load_corpus(out / files::kCorpus);
  auto vocab = world::build_vocab(kb);
  auto mc = c.model;
  mc.vocab_size = vocab.size();
  mc.seed = seeds.init;
  auto pc = c.pretrain;
  pc.seed = seeds.pretrain;
  auto res = pretrain(tinylm::init_model(mc, vocab), tokenize_corpus(corpus, vocab), pc);
  save_model(res.model, out / files::kBase);
  io::CsvWriter log({"epoch", "mean_nll", "token_nll"});
  for (const auto& e : res.log)
    log.row({std::to_string(e.epoch), fmt(e.mean_nll), fmt(e.token_nll)});
  log.save(out / files::kPretrainLog);
}

void stage_prefs_build(const ExperimentConfig& c, const fs::path& out) {
  auto kb = world::load_kb(out / files::kKb);
  auto q = world::load_queries(out / files::kQueries);
  auto base = load_model(out / files::kBase);
  std::vector<prefgen::PromptSpec> prompts;
  for (const auto& e : q.preference_entities) prompts.push_back({world::bio_prompt(e), e});
  tinylm::SampleSpec spec;
  spec.strategy = tinylm::Strategy::Multinomial;
  spec.temperature = c.prefs.temperature;
  spec.max_len = c.prefs.max_len;
  spec.seed = stage_seeds(c.seed).prefs;
  auto ds = prefgen::build_general_dataset(base, prompts, c.prefs.responses_per_prompt, kb, spec);
  prefgen::save_preferences(ds.pairs, {{"prompts", ds.prompts}, {"responses", ds.responses}},
                            out / files::kPrefsGeneral);
}

void stage_apeft_build(const ExperimentConfig& c, const fs::path& out) {
  auto kb = world::load_kb(out / files::kKb);
  auto base = load_model(out / files::kBase);
  auto general = prefgen::load_preferences(out / files::kPrefsGeneral);
  auto facts = apeft::extract_pref_facts(general);
  std::vector<apeft::KnowledgeProbe> probes;
  probes.reserve(facts.size());
  for (const auto& f : facts) probes.push_back(apeft::true_false_probe(f, kb));
  auto spec = c.detection;
  spec.seed = stage_seeds(c.seed).detect;
  auto build = apeft::build_atomic_prefs(base, probes, spec);
  const auto& n = build.status_counts;
  prefgen::save_preferences(build.prefs,
                            {{"facts", facts.size()}, {"unknown", n[0]}, {"potentially_known", n[1]},
                             {"known", n[2]}},
                            out / files::kPrefsAtomic);
  io::write_jsonl(out / files::kAtomicAudit, {{"schema", "faktlab.audit/1"}}, build.audit());
}

void stage_randqa_build(const ExperimentConfig& c, const fs::path& out) {
  auto kb = world::load_kb(out / files::kKb);
  auto q = world::load_queries(out / files::kQueries);
  auto base = load_model(out / files::kBase);
  const auto target = prefgen::load_preferences(out / files::kPrefsAtomic).size();
  std::set<std::pair<std::string, world::Relation>> exclude;
  for (const auto* set : {&q.ood_fp, &q.ood_kqa})
    for (const auto& x : *set)
      for (auto r : x.relations) exclude.insert({x.entity, r});
  auto spec = c.detection;
  spec.seed = stage_seeds(c.seed).randqa;
  auto rq = apeft::build_random_qa_prefs(base, kb, q.preference_entities, spec, target, exclude);
  prefgen::save_preferences(rq.build.prefs, {{"target", rq.target_size}, {"shortfall", rq.shortfall}},
                            out / files::kPrefsRandom);
  io::write_jsonl(out / files::kRandomAudit, {{"schema", "faktlab.audit/1"}}, rq.build.audit());
}

void stage_tune(const ExperimentConfig& c, const fs::path& out, LossKind loss, Arm arm) {
  auto base = load_model(out / files::kBase);
  auto ref = base.snapshot_frozen();
  auto prefs = prefgen::load_preferences(out / files::kPrefsGeneral);
  if (arm != Arm::General) {
    auto extra = prefgen::load_preferences(out / (arm == Arm::Atomic ? files::kPrefsAtomic
                                                                     : files::kPrefsRandom));
    prefs = apeft::mix(prefs, extra, stage_seeds(c.seed).mix);
  }
  auto res = preflosses::tune(base, ref, tokenize(prefs, base.vocab()), loss_config(c, loss),
                              train_config(c));
  const auto name = run_name(loss, arm);
  save_model(res.model, out / "tuned" / (name + ".ckpt"));
  io::write_file(out / "logs" / (name + "_train.csv"), preflosses::train_log_csv(res.log));
}

EvalReport stage_eval(const ExperimentConfig& c, const fs::path& out, const std::string& name) {
  auto kb = world::load_kb(out / files::kKb);
  auto q = world::load_queries(out / files::kQueries);
  auto model = load_model(model_path(out, name));
  auto report = evaluate(model, q, kb, c.eval);
  auto j = eval_report_json(report);
  j["model"] = name;
  io::write_file(out / "eval" / (name + ".json"), j.dump(2) + "\n");
  return report;
}

tokenshift::DiagnosisReport stage_token_shift(const ExperimentConfig& c, const fs::path& out) {
  auto q = world::load_queries(out / files::kQueries);
  auto base = load_model(out / files::kBase);
  auto tuned = load_model(model_path(out, run_name(c.shift.loss, Arm::General)));
  tokenshift::AnalysisSpec spec{c.shift.max_len};
  auto id = tokenshift::analyze(tuned, base, prompts_of({&q.id_bio}), spec);
  auto ood = tokenshift::analyze(tuned, base, prompts_of({&q.ood_open, &q.ood_fp, &q.ood_kqa}), spec);
  auto hid = tokenshift::histogram(id);
  auto hood = tokenshift::histogram(ood);
  const fs::path dir = out / "shift";
  io::write_file(dir / "records_id.csv", tokenshift::records_csv(id));
  io::write_file(dir / "records_ood.csv", tokenshift::records_csv(ood));
  io::write_file(dir / "histogram_id.csv", tokenshift::histogram_csv(hid));
  io::write_file(dir / "histogram_ood.csv", tokenshift::histogram_csv(hood));
  io::write_file(dir / "histogram_id.svg", tokenshift::histogram_svg(hid, "ID prompts"));
  io::write_file(dir / "histogram_ood.svg", tokenshift::histogram_svg(hood, "OOD prompts"));
  auto d = tokenshift::diagnose(hid, hood, c.shift.basis);
  io::write_file(dir / "diagnosis.txt", d.summary() + "\n");
  io::Json j = {{"shifted_rate_id", d.shifted_rate_id}, {"shifted_rate_ood", d.shifted_rate_ood},
                {"abs_rate_id", d.abs_rate_id},         {"abs_rate_ood", d.abs_rate_ood},
                {"ratio", d.ratio},                     {"verdict", tokenshift::verdict_name(d.verdict)},
                {"tokens_id", hid.total},               {"tokens_ood", hood.total}};
  io::write_file(dir / "diagnosis.json", j.dump(2) + "\n");
  return d;
}

io::Json eval_report_json(const EvalReport& r) {
  io::Json j = io::Json::object();
  const auto names = metric_names();
  const auto values = metric_values(r);
  for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = values[i];
  j["bio_empty"] = r.bio.empty;
  j["bio_prompts"] = r.bio.prompts;
  j["fava_empty"] = r.fava.empty;
  j["fava_prompts"] = r.fava.prompts;
  return j;
}

EvalReport eval_report_from_json(const io::Json& j) {
  EvalReport r;
  try {
    r.bio = {j.at("bio_fs"), j.at("bio_nc"), j.at("bio_ne"), j.at("bio_empty"), j.at("bio_prompts")};
    r.fava = {j.at("fava_fs"), j.at("fava_nc"), j.at("fava_ne"), j.at("fava_empty"),
              j.at("fava_prompts")};
    r.fp_acc = j.at("fp_acc");
    r.kqa_acc = j.at("kqa_acc");
  } catch (const io::Json::exception& e) {
    fail(ErrorKind::Io, std::string("malformed eval report: ") + e.what());
  }
  return r;
}

void stage_report(const ExperimentConfig& c, const fs::path& out) {
  auto load = [&](const std::string& name) {
    return eval_report_from_json(io::Json::parse(io::read_file(out / "eval" / (name + ".json"))));
  };
  struct Row {
    std::string name, loss, arm;
    std::vector<double> values;
  };
  std::vector<Row> rows;
  rows.push_back({"vanilla", "none", "none", metric_values(load("vanilla"))});
  for (auto loss : c.losses)
    for (Arm arm : kArms)
      if (arm_enabled(c.arms, arm))
        rows.push_back({run_name(loss, arm), preflosses::to_string(loss), std::string(arm_name(arm)),
                        metric_values(load(run_name(loss, arm)))});

  const auto names = metric_names();
  io::CsvWriter results({"run", "loss", "arm", "metric", "value"});
  std::vector<std::string> cols = {"run"};
  for (const auto& n : names) {
    cols.push_back(n);
    cols.push_back(n + "_delta");
  }
  io::CsvWriter table(cols);
  const auto& van = rows.front().values;
  for (const auto& r : rows) {
    std::vector<std::string> cells = {r.name};
    for (std::size_t i = 0; i < names.size(); ++i) {
      results.row({r.name, r.loss, r.arm, names[i], fmt(r.values[i])});
      cells.push_back(fmt(r.values[i]));
      cells.push_back(fmt(r.values[i] - van[i]));
    }
    table.row(cells);
  }
  results.save(out / files::kResults);
  table.save(out / files::kTable);

  std::ostringstream md;
  md << "# Results (seed " << c.seed << ")\n\n"
     << "| run | Bio FS | Bio NC | Bio NE | Open FS | Open NC | Open NE | FP Acc | KQA Acc | AVG |\n"
     << "|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rows) {
    md << "| " << r.name;
    for (std::size_t i = 0; i < names.size(); ++i) {
      const bool count = names[i].ends_with("_nc") || names[i].ends_with("_ne");
      md << " | " << io::format_fixed(count ? r.values[i] : 100.0 * r.values[i], 2);
      if (r.name != "vanilla") {
        const double d = r.values[i] - van[i];
        md << " (" << (d >= 0 ? "+" : "") << io::format_fixed(count ? d : 100.0 * d, 2) << ")";
      }
    }
    md << " |\n";
  }
  md << "\nFS, accuracy and AVG in percent; parenthesized values are deltas against vanilla.\n"
     << "NC and NE are mean per-response counts of supported and contradicted facts.\n"
     << "AVG is the unweighted mean of Bio FS, Open FS, FP Acc and KQA Acc.\n";
  const auto diag = out / "shift" / "diagnosis.txt";
  if (fs::exists(diag)) md << "\n## Token shift\n\n" << io::read_file(diag);
  io::write_file(out / files::kReport, md.str());
}

std::map<std::string, std::string> artifact_digests(const fs::path& out) {
  std::map<std::string, std::string> d;
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), out).generic_string();
    if (rel == files::kManifest) continue;
    d[rel] = io::sha256_file(e.path());
  }
  return d;
}

io::Json build_manifest(const ExperimentConfig& c, const fs::path& out) {
  const auto s = stage_seeds(c.seed);
  auto q = world::load_queries(out / files::kQueries);
  auto count = [&](const char* f) -> io::Json {
    if (!fs::exists(out / f)) return nullptr;
    return prefgen::load_preferences(out / f).size();
  };
  io::Json m = {
      {"schema", kManifestSchema},
      {"config", config_to_json(c)},
      {"seeds",
       {{"master", c.seed}, {"kb", s.kb}, {"corpus", s.corpus}, {"split", s.split},
        {"queries", s.queries}, {"init", s.init}, {"pretrain", s.pretrain}, {"prefs", s.prefs},
        {"detect", s.detect}, {"randqa", s.randqa}, {"mix", s.mix}, {"train", s.train}}},
      {"sizes",
       {{"entities", c.world.num_entities},
        {"corpus_docs", world::load_corpus(out / files::kCorpus).docs.size()},
        {"id_bio", q.id_bio.size()},
        {"ood_open", q.ood_open.size()},
        {"ood_fp", q.ood_fp.size()},
        {"ood_kqa", q.ood_kqa.size()},
        {"prefs_general", count(files::kPrefsGeneral)},
        {"prefs_atomic", count(files::kPrefsAtomic)},
        {"prefs_randqa", count(files::kPrefsRandom)}}},
      {"splits",
       {{"preference_entities", q.preference_entities}, {"heldout_entities", q.heldout_entities}}},
      {"artifacts", artifact_digests(out)},
  };
  return m;
}

ExperimentConfig manifest_config(const io::Json& manifest) {
  if (!manifest.is_object() || manifest.value("schema", "") != kManifestSchema)
    fail(ErrorKind::Config, std::string("manifest schema must be ") + kManifestSchema);
  if (!manifest.contains("config")) fail(ErrorKind::Config, "manifest has no config");
  return config_from_json(manifest.at("config"));
}

void run_experiment(const ExperimentConfig& c, const fs::path& out) {
  c.validate();
  run_stage("world-gen", [&] { stage_world_gen(c, out); });
  run_stage("pretrain", [&] { stage_pretrain(c, out); });
  run_stage("prefs-build", [&] { stage_prefs_build(c, out); });
  if (c.arms.atomic || c.arms.random_qa) run_stage("apeft-build", [&] { stage_apeft_build(c, out); });
  if (c.arms.random_qa) run_stage("randqa-build", [&] { stage_randqa_build(c, out); });
  run_stage("eval", [&] { stage_eval(c, out, "vanilla"); });
  for (auto loss : c.losses)
    for (Arm arm : kArms) {
      if (!arm_enabled(c.arms, arm)) continue;
      run_stage("tune", [&] { stage_tune(c, out, loss, arm); });
      run_stage("eval", [&] { stage_eval(c, out, run_name(loss, arm)); });
    }
  if (c.arms.general && std::count(c.losses.begin(), c.losses.end(), c.shift.loss))
    run_stage("token-shift", [&] { stage_token_shift(c, out); });
  run_stage("report", [&] { stage_report(c, out); });
  io::write_file(out / files::kManifest, build_manifest(c, out).dump(2) + "\n");
}

ReplayResult replay(const fs::path& manifest_path, const fs::path& out) {
  io::Json manifest;
  try {
    manifest = io::Json::parse(io::read_file(manifest_path));
  } catch (const io::Json::exception& e) {
    fail(ErrorKind::Config, std::string("manifest is not JSON: ") + e.what());
  }
  auto c = manifest_config(manifest);
  if (fs::exists(out) && !fs::is_empty(out))
    fail(ErrorKind::InvalidArgument, "replay output directory must be empty: " + out.string());
  run_experiment(c, out);
  ReplayResult r;
  const auto now = artifact_digests(out);
  std::map<std::string, std::string> before = manifest.at("artifacts");
  for (const auto& [path, digest] : before) {
    ++r.compared;
    auto it = now.find(path);
    if (it == now.end() || it->second != digest) r.mismatched.push_back(path);
  }
  for (const auto& [path, _] : now)
    if (!before.count(path)) r.mismatched.push_back(path);
  return r;
}

std::vector<std::size_t> quantity_sizes(const std::vector<double>& fractions, std::size_t n) {
  std::vector<std::size_t> sizes;
  for (double f : fractions) {
    auto s = static_cast<std::size_t>(std::llround(f * static_cast<double>(n)));
    sizes.push_back(std::clamp<std::size_t>(s, 1, n));
  }
  return sizes;
}

void sweep_quantity(const ExperimentConfig& c, const fs::path& out) {
  auto kb = world::load_kb(out / files::kKb);
  auto q = world::load_queries(out / files::kQueries);
  auto base = load_model(out / files::kBase);
  auto ref = base.snapshot_frozen();
  auto general = prefgen::load_preferences(out / files::kPrefsGeneral);
  if (general.empty()) fail(ErrorKind::State, "no general preferences to subsample");
  auto sizes = quantity_sizes(c.sweeps.quantity_fractions, general.size());
  auto groups = prefgen::subsample_quantity(general, sizes, stage_seeds(c.seed).quantity);
  std::vector<std::string> names;
  std::vector<std::vector<EvalReport>> reports;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    names.push_back(io::format_double(c.sweeps.quantity_fractions[g]));
    reports.emplace_back();
    for (auto loss : c.losses) reports.back().push_back(tune_and_eval(c, base, ref, groups[g], loss, q, kb));
  }
  write_sweep(out, "sweep_quantity", names, sizes, c.losses, reports);
}

void sweep_quality(const ExperimentConfig& c, const fs::path& out) {
  auto kb = world::load_kb(out / files::kKb);
  auto q = world::load_queries(out / files::kQueries);
  auto base = load_model(out / files::kBase);
  auto ref = base.snapshot_frozen();
  auto general = prefgen::load_preferences(out / files::kPrefsGeneral);
  auto groups = prefgen::group_by_quality(general, stage_seeds(c.seed).quality);
  std::vector<std::string> names;
  std::vector<std::size_t> sizes;
  std::vector<std::vector<EvalReport>> reports;
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    names.emplace_back(prefgen::quality_level_name(static_cast<prefgen::QualityLevel>(g)));
    sizes.push_back(groups.groups[g].size());
    reports.emplace_back();
    for (auto loss : c.losses)
      reports.back().push_back(tune_and_eval(c, base, ref, groups.groups[g], loss, q, kb));
  }
  write_sweep(out, "sweep_quality", names, sizes, c.losses, reports);
}

}  // namespace faktlab::harness
