// Acceptance gate: one PASS/FAIL line per criterion.
//
//   acceptance [--only 1,2,...] [--work DIR]
//
// Exit status is 0 only when every selected criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "faktlab/apeft/apeft.hpp"
#include "faktlab/factuality/factscore.hpp"
#include "faktlab/harness/experiment.hpp"
#include "faktlab/io.hpp"
#include "faktlab/prefgen/prefgen.hpp"
#include "faktlab/preflosses/losses.hpp"
#include "faktlab/preflosses/tune.hpp"
#include "faktlab/rng.hpp"
#include "faktlab/tokenshift/tokenshift.hpp"
#include "faktlab/world/corpus.hpp"
#include "faktlab/world/grammar.hpp"
#include "support.hpp"
#include "tinylm/transformer.hpp"

using namespace faktlab;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int decimals = 4) { return io::format_fixed(v, decimals); }

// ---------------------------------------------------------------- 1

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Outcome closed_forms() {
  using namespace preflosses;
  LossConfig c;  // beta = tau = gamma = 0.1
  const PairLogprobs worked{-10.0, -12.0, -11.0, -11.0};
  auto loss = [&](LossKind k, const PairLogprobs& p) {
    LossConfig kc = c;
    kc.kind = k;
    if (k == LossKind::Kto) return kto_pair_loss(p, kc, std::span(&p, 1)).value;
    return pair_loss(p, kc).value;
  };
  const std::map<LossKind, double> expected = {{LossKind::Dpo, 0.598139}, {LossKind::Ipo, 9.0},
                                               {LossKind::Kto, 0.462594}, {LossKind::Cpo, 10.598139},
                                               {LossKind::Rso, 0.8}};
  double worst = 0.0;
  for (auto [k, v] : expected) worst = std::max(worst, std::abs(loss(k, worked) - v));
  // Scalar re-derivation of the worked DPO value.
  const double dpo_oracle = -std::log(sig(0.1 * ((-10.0 + 11.0) - (-12.0 + 11.0))));

  const PairLogprobs equal{-7.0, -9.0, -7.0, -9.0};
  double worst_eq = 0.0;
  worst_eq = std::max(worst_eq, std::abs(loss(LossKind::Dpo, equal) - std::log(2.0)));
  worst_eq = std::max(worst_eq, std::abs(loss(LossKind::Ipo, equal) - std::pow(1.0 / (2.0 * 0.1), 2)));
  worst_eq = std::max(worst_eq, std::abs(loss(LossKind::Rso, equal) - 1.0));
  worst_eq = std::max(worst_eq, std::abs(loss(LossKind::Kto, equal) - 0.5));
  const bool pass = worst <= 1e-6 && worst_eq <= 1e-12 && std::abs(dpo_oracle - 0.598139) <= 1e-6;
  return {pass, "max |err| worked " + num(worst, 9) + " (tol 1e-6), at reference " +
                    num(worst_eq, 15) + " (tol 1e-12)"};
}

// ---------------------------------------------------------------- 2

Outcome gradients() {
  using namespace preflosses;
  auto policy = testing::random_model(31);
  auto ref = testing::random_model(32).snapshot_frozen();
  std::vector<TokenPair> pairs = {{{3, 4, 5}, {6, 7, 2}, {8, 2}},
                                  {{9, 10}, {11, 6, 7, 2}, {12, 13, 2}},
                                  {{7, 6}, {12, 2}, {13, 14, 15, 2}},
                                  {{9}, {6, 6, 2}, {7, 2}}};
  double worst = 0.0;
  for (LossKind k : kAllLosses) {
    LossConfig c;
    c.kind = k;
    c.beta = 0.5;
    TrainConfig tc;
    tc.epochs = 1;
    tc.batch_size = pairs.size();
    tc.learning_rate = 1.0;
    tc.optimizer = tinylm::OptimizerKind::Sgd;
    auto res = tune(policy, ref, pairs, c, tc);
    std::vector<double> params(policy.params().begin(), policy.params().end());
    auto f = [&](const std::vector<double>& p) {
      tinylm::PolicyModel m(policy.config(), policy.vocab(), p, false);
      return dataset_loss(m, ref, pairs, c);
    };
    Rng rng(Rng(77).split(to_string(k)).key());
    for (int t = 0; t < 200; ++t) {
      const std::size_t i = rng.below(params.size());
      const double analytic = policy.params()[i] - res.model.params()[i];
      worst = std::max(worst, testing::rel_err(analytic, testing::central_diff(params, i, f)));
    }
  }
  return {worst <= 1e-3, "5 losses x 200 coordinates, worst relative error " + num(worst, 6) +
                             " (tol 1e-3)"};
}

// ---------------------------------------------------------------- 3

Outcome factscore_oracle() {
  auto kb = world::gen_kb(11, 100);
  const auto all = kb.triples();
  std::set<world::Triple> truth(all.begin(), all.end());
  Rng rng(12);
  std::size_t mismatches = 0, facts = 0;
  for (int n = 0; n < 500; ++n) {
    std::string text;
    std::size_t nc = 0, ne = 0;
    for (std::size_t i = 0, len = 1 + rng.below(8); i < len; ++i) {
      auto t = kb.triple(rng.below(kb.size()), world::kRelations[rng.below(8)]);
      if (rng.uniform() < 0.4) t.object = world::draw_distractor(kb, t.entity, t.relation, 1.0, rng);
      (truth.count(t) ? nc : ne) += 1;
      text += (text.empty() ? "" : " ") + world::verbalize_text(t, rng.below(4));
    }
    facts += nc + ne;
    const auto r = factuality::factscore(text, kb);
    const double fs = static_cast<double>(nc) / static_cast<double>(nc + ne);
    if (r.nc != nc || r.ne != ne || r.fs != fs) ++mismatches;
  }
  return {mismatches == 0,
          "500 texts, " + std::to_string(facts) + " facts, " + std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------- 4

Outcome pair_identity() {
  Rng rng(21);
  std::size_t trials = 0, bad = 0;
  for (std::size_t n = 2; n <= 8; ++n)
    for (int t = 0; t < 200; ++t, ++trials) {
      std::vector<prefgen::ScoredResponse> rs;
      for (std::size_t i = 0; i < n; ++i)
        rs.push_back({"r" + std::to_string(i), static_cast<double>(rng.below(4)) / 4.0});
      std::size_t expected = 0;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) expected += rs[i].fs != rs[j].fs;
      const auto pairs = prefgen::build_pairs({"x", "e"}, rs);
      bool ok = pairs.size() == expected;
      for (const auto& p : pairs) ok = ok && p.f_w > p.f_l;
      bad += !ok;
    }
  return {bad == 0, std::to_string(trials) + " trials over n=2..8, " + std::to_string(bad) + " failures"};
}

// ---------------------------------------------------------------- 5

std::size_t binomial_quantile(std::size_t n, double p, double level) {
  double cdf = 0.0;
  for (std::size_t c = 0; c <= n; ++c) {
    cdf += std::exp(std::lgamma(n + 1.0) - std::lgamma(c + 1.0) - std::lgamma(n - c + 1.0) +
                    c * std::log(p) + (n - c) * std::log1p(-p));
    if (cdf >= level) return c;
  }
  return n;
}

Outcome detection_stats() {
  using tinylm::Vocab;
  auto kb = world::gen_kb(3, 30);
  auto vocab = world::build_vocab(kb);
  apeft::DetectionSpec spec;
  spec.k = 200;
  spec.seed = 8;
  std::ostringstream detail;
  bool pass = true;
  for (double p : {0.0, 0.3, 0.7, 1.0}) {
    tinylm::FunctionModel coin(vocab, 64, [&vocab, p](std::span<const tinylm::TokenId>) {
      std::vector<double> l(vocab.size(), -std::numeric_limits<double>::infinity());
      l[Vocab::kTrueId] = std::log(p);
      l[Vocab::kFalseId] = std::log1p(-p);
      l[Vocab::kEosId] = 0.0;
      return l;
    });
    const bool extreme = p == 0.0 || p == 1.0;
    const double lo = extreme ? p : binomial_quantile(200, p, 0.005) / 200.0;
    const double hi = extreme ? p : binomial_quantile(200, p, 0.995) / 200.0;
    auto r_of = [&](std::size_t i) {
      auto t = kb.triple(i % kb.size(), world::kRelations[i / kb.size() % 8]);
      auto probe = apeft::true_false_probe({{t, 0, 0, world::canonical_sentence(t)}, i}, kb);
      return apeft::detect_knowledge(coin, probe, spec).r;
    };
    // Interior r is random: a 99% interval admits about 2 of 201 draws
    // outside it, so the check is on the whole sample. Extremes are exact.
    std::size_t outside = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i <= 200; ++i) {
      const double ri = r_of(i);
      mean += ri / 201.0;
      outside += ri < lo || ri > hi;
    }
    if (extreme) pass = pass && outside == 0;
    else pass = pass && outside <= 6 && std::abs(mean - p) <= 3.0 * std::sqrt(p * (1 - p) / 200.0 / 201.0);
    detail << "p=" << p << ": first probe r=" << r_of(0) << ", interval [" << lo << ", " << hi
           << "], " << outside << "/201 probes outside, mean r " << num(mean) << "; ";
  }
  using apeft::KnowledgeStatus;
  const std::size_t k = 200;
  const bool bounds = apeft::status_for(0, k) == KnowledgeStatus::Unknown &&
                      apeft::status_for(1, k) == KnowledgeStatus::PotentiallyKnown &&
                      apeft::status_for(k - 1, k) == KnowledgeStatus::PotentiallyKnown &&
                      apeft::status_for(k, k) == KnowledgeStatus::Known;
  detail << "| status boundaries " << (bounds ? "exact" : "wrong");
  return {pass && bounds, detail.str()};
}

// ---------------------------------------------------------------- 6

Outcome token_shift_nullity() {
  auto base = testing::random_model(3, 30, 0.3, 8, 64);
  auto ref = base.snapshot_frozen();
  Rng rng(9);
  std::vector<preflosses::TokenPair> pairs;
  for (int i = 0; i < 16; ++i) {
    auto w = [&] { return static_cast<tinylm::TokenId>(6 + rng.below(30)); };
    pairs.push_back({{w(), w()}, {w(), w(), 2}, {w(), 2}});
  }
  preflosses::TrainConfig tc;
  tc.epochs = 2;
  tc.learning_rate = 1e-2;
  auto tuned = preflosses::tune(base, ref, pairs, {}, tc).model;

  std::vector<std::string> prompts;
  for (int i = 0; i < 120; ++i) {
    std::string p;
    for (std::size_t k = 0, len = 1 + rng.below(4); k < len; ++k)
      p += (k ? " " : "") + tuned.vocab().token(static_cast<tinylm::TokenId>(6 + rng.below(30)));
    prompts.push_back(p);
  }
  auto self = tokenshift::histogram(tokenshift::analyze(tuned, tuned, prompts));
  auto perturbed = tuned;
  {
    tinylm::detail::ParamLayout layout(tuned.config());
    auto p = perturbed.mutable_params();
    Rng prng(4);
    for (std::size_t i = layout.w_out; i < layout.b_out + layout.vocab; ++i) p[i] += 0.5 * prng.normal();
  }
  auto moved = tokenshift::histogram(tokenshift::analyze(perturbed, tuned, prompts));
  const bool pass = self.total >= 1000 && self.shifted_rate == 0.0 && moved.total >= 1000 &&
                    moved.shifted_rate > 0.0;
  return {pass, "self: " + std::to_string(self.total) + " tokens, shifted_rate " +
                    num(self.shifted_rate, 6) + "; perturbed output layer: " +
                    std::to_string(moved.total) + " tokens, shifted_rate " + num(moved.shifted_rate)};
}

// ---------------------------------------------------------------- 7-9

struct SeedRun {
  std::uint64_t seed = 0;
  std::map<std::string, harness::EvalReport> evals;
  io::Json diagnosis;
  double t_id = 0.0;     // stages criterion 7 needs
  double t_all = 0.0;    // every stage
  double t_shift = 0.0;  // token-shift stage
};

SeedRun run_seed(std::uint64_t seed, const fs::path& work) {
  using harness::Arm;
  auto c = harness::ExperimentConfig::defaults();
  c.seed = seed;
  c.arms.random_qa = false;
  c.validate();
  const fs::path out = work / ("seed" + std::to_string(seed));
  fs::remove_all(out);
  SeedRun r;
  r.seed = seed;
  auto timed = [&](bool id_stage, const std::function<void()>& f) {
    auto t0 = Clock::now();
    f();
    const double s = seconds_since(t0);
    r.t_all += s;
    if (id_stage) r.t_id += s;
    return s;
  };
  timed(true, [&] { harness::stage_world_gen(c, out); });
  timed(true, [&] { harness::stage_pretrain(c, out); });
  timed(true, [&] { harness::stage_prefs_build(c, out); });
  timed(false, [&] { harness::stage_apeft_build(c, out); });
  timed(true, [&] { r.evals["vanilla"] = harness::stage_eval(c, out, "vanilla"); });
  for (auto loss : c.losses)
    for (Arm arm : {Arm::General, Arm::Atomic}) {
      const auto name = harness::run_name(loss, arm);
      const bool id = loss == preflosses::LossKind::Dpo && arm == Arm::General;
      timed(id, [&] { harness::stage_tune(c, out, loss, arm); });
      timed(id, [&] { r.evals[name] = harness::stage_eval(c, out, name); });
    }
  r.t_shift = timed(false, [&] { harness::stage_token_shift(c, out); });
  timed(false, [&] { harness::stage_report(c, out); });
  r.diagnosis = io::Json::parse(io::read_file(out / "shift" / "diagnosis.json"));
  std::printf("  seed %llu: vanilla bio %.4f avg %.4f | dpo general bio %.4f avg %.4f | dpo atom avg %.4f"
              " | shift id %.4f ood %.4f | %.0fs\n",
              static_cast<unsigned long long>(seed), r.evals["vanilla"].bio.fs,
              r.evals["vanilla"].avg(), r.evals["dpo_general"].bio.fs, r.evals["dpo_general"].avg(),
              r.evals["dpo_atom"].avg(), r.diagnosis["shifted_rate_id"].get<double>(),
              r.diagnosis["shifted_rate_ood"].get<double>(), r.t_all);
  std::fflush(stdout);
  return r;
}

Outcome id_improvement(const std::vector<SeedRun>& runs) {
  int wins = 0;
  double t = 0.0;
  std::string deltas;
  for (const auto& r : runs) {
    const double d = r.evals.at("dpo_general").bio.fs - r.evals.at("vanilla").bio.fs;
    wins += d > 0.0;
    t += r.t_id;
    deltas += (deltas.empty() ? "" : ", ") + num(d);
  }
  return {wins >= 4 && t < 600.0, "DPO improves ID bio FS in " + std::to_string(wins) +
                                      "/5 seeds (deltas " + deltas + "), " + num(t, 0) + "s (limit 600s)"};
}

Outcome apeft_gain(const std::vector<SeedRun>& runs) {
  int dpo_wins = 0;
  double t = 0.0, total_gain = 0.0;
  std::size_t cells = 0;
  std::string per_loss;
  for (auto loss : preflosses::kAllLosses) {
    const auto l = preflosses::to_string(loss);
    double g = 0.0;
    for (const auto& r : runs) {
      const double d = r.evals.at(l + "_atom").avg() - r.evals.at(l + "_general").avg();
      g += d;
      if (loss == preflosses::LossKind::Dpo) dpo_wins += d > 0.0;
    }
    total_gain += g;
    cells += runs.size();
    per_loss += (per_loss.empty() ? "" : ", ") + l + " " + num(g / runs.size());
  }
  for (const auto& r : runs) t += r.t_all;
  const double mean_gain = total_gain / static_cast<double>(cells);
  return {dpo_wins >= 4 && mean_gain > 0.0 && t < 1800.0,
          "DPO w/atom AVG beats general in " + std::to_string(dpo_wins) +
              "/5 seeds; mean gain " + num(mean_gain) + " (" + per_loss + "); " + num(t, 0) +
              "s (limit 1800s)"};
}

Outcome under_alignment(const std::vector<SeedRun>& runs) {
  int wins = 0;
  double t = 0.0;
  std::string ratios;
  for (const auto& r : runs) {
    const double id = r.diagnosis["shifted_rate_id"];
    const double ood = r.diagnosis["shifted_rate_ood"];
    wins += id > ood;
    t += r.t_shift;
    ratios += (ratios.empty() ? "" : ", ") + num(r.diagnosis["ratio"].get<double>(), 3);
  }
  return {wins >= 4 && t < 300.0, "ID shifted rate > OOD in " + std::to_string(wins) +
                                      "/5 seeds; OOD/ID ratios " + ratios + "; analysis " +
                                      num(t, 0) + "s (limit 300s)"};
}

// ---------------------------------------------------------------- 10-11

harness::ExperimentConfig tiny_config() {
  auto c = harness::ExperimentConfig::defaults();
  c.seed = 3;
  c.world.num_entities = 24;
  c.world.sentences_per_entity = 8;
  c.model.embed_dim = 16;
  c.pretrain.epochs = 25;
  c.pretrain.learning_rate = 0.01;
  c.queries = {0, 6, 6, 6};
  c.prefs.preference_entities = 10;
  c.prefs.responses_per_prompt = 3;
  c.prefs.max_len = 32;
  c.detection.k = 4;
  c.losses = {preflosses::LossKind::Dpo, preflosses::LossKind::Kto};
  c.train.epochs = 1;
  c.train.learning_rate = 1e-3;
  c.eval.max_len = 32;
  c.shift.max_len = 32;
  return c;
}

// One row per (group, loss, metric), each exactly once.
bool sweep_rows_ok(const fs::path& csv, std::size_t groups, std::size_t losses, std::string& note) {
  auto rows = io::parse_csv(io::read_file(csv));
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  for (std::size_t i = 1; i < rows.size(); ++i) seen.insert({rows[i][0], rows[i][2], rows[i][3]});
  const std::size_t want = groups * losses * harness::metric_names().size();
  note += csv.filename().string() + " " + std::to_string(rows.size() - 1) + "/" + std::to_string(want) + " rows; ";
  return rows.size() - 1 == want && seen.size() == want;
}

Outcome sweep_integrity(const fs::path& tiny_run, const fs::path& work) {
  bool ok = true;
  std::string note;
  // Quantity groups on a synthetic dataset: nested, dataset order, exact sizes.
  std::vector<prefgen::Preference> ds(97);
  for (std::size_t i = 0; i < ds.size(); ++i) ds[i].x = std::to_string(i);
  const std::vector<double> fractions = {0.1, 0.25, 0.5, 0.75, 1.0};
  const auto sizes = harness::quantity_sizes(fractions, ds.size());
  const auto groups = prefgen::subsample_quantity(ds, sizes, 5);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    ok = ok && groups[g].size() == sizes[g];
    std::vector<int> idx;
    for (const auto& p : groups[g]) idx.push_back(std::stoi(p.x));
    ok = ok && std::is_sorted(idx.begin(), idx.end());
    if (g) {
      std::set<std::string> outer;
      for (const auto& p : groups[g]) outer.insert(p.x);
      for (const auto& p : groups[g - 1]) ok = ok && outer.count(p.x);
    }
  }
  note += "quantity nested " + std::string(ok ? "yes" : "no") + "; ";

  // Quality thresholds and equal-size partitions.
  using prefgen::QualityLevel;
  bool q_ok = prefgen::quality_level(0.05) == QualityLevel::Level1 &&
              prefgen::quality_level(0.15) == QualityLevel::Level2 &&
              prefgen::quality_level(0.25) == QualityLevel::Level3;
  std::vector<prefgen::Preference> qd;
  Rng rng(6);
  const double levels[] = {0.05, 0.15, 0.25};
  for (std::size_t i = 0; i < 120; ++i) {
    prefgen::Preference p;
    p.x = std::to_string(i);
    p.q = levels[rng.below(3)];
    p.f_w = 0.5 + p.q;
    p.f_l = 0.5;
    qd.push_back(p);
  }
  auto qg = prefgen::group_by_quality(qd, 7);
  const std::size_t smallest = *std::min_element(qg.level_sizes.begin(), qg.level_sizes.end());
  for (std::size_t l = 0; l < 4; ++l) {
    q_ok = q_ok && qg.groups[l].size() == smallest;
    if (l < 3)
      for (const auto& p : qg.groups[l]) q_ok = q_ok && static_cast<std::size_t>(prefgen::quality_level(p.q)) == l;
  }
  std::array<std::size_t, 3> mixed{};
  for (const auto& p : qg.groups[3]) ++mixed[static_cast<std::size_t>(prefgen::quality_level(p.q))];
  q_ok = q_ok && *std::max_element(mixed.begin(), mixed.end()) - *std::min_element(mixed.begin(), mixed.end()) <= 1;
  note += "quality partitions " + std::string(q_ok ? "equal" : "wrong") + " (" + std::to_string(smallest) + " each); ";
  ok = ok && q_ok;

  // Sweep CSVs from a real tiny run. The quality sweep gets rescored pairs so
  // that every level is populated.
  const fs::path dir = work / "sweeps";
  fs::remove_all(dir);
  fs::create_directories(dir);
  for (const char* f : {harness::files::kKb, harness::files::kQueries, harness::files::kBase,
                        harness::files::kPrefsGeneral})
    fs::copy_file(tiny_run / f, dir / f);
  auto c = tiny_config();
  c.sweeps.quantity_fractions = {0.5, 1.0};
  harness::sweep_quantity(c, dir);
  ok = sweep_rows_ok(dir / "sweep_quantity.csv", 2, c.losses.size(), note) && ok;
  auto prefs = prefgen::load_preferences(dir / harness::files::kPrefsGeneral);
  for (std::size_t i = 0; i < prefs.size(); ++i) {
    prefs[i].q = levels[i % 3];
    prefs[i].f_l = 0.5;
    prefs[i].f_w = 0.5 + prefs[i].q;
  }
  prefgen::save_preferences(prefs, {}, dir / harness::files::kPrefsGeneral);
  harness::sweep_quality(c, dir);
  ok = sweep_rows_ok(dir / "sweep_quality.csv", 4, c.losses.size(), note) && ok;
  std::size_t per_metric = 0;
  for (const auto& e : fs::directory_iterator(dir / "sweep_quality")) per_metric += e.is_regular_file();
  ok = ok && per_metric == c.losses.size() * harness::metric_names().size();
  note += std::to_string(per_metric) + " per-metric quality CSVs";
  return {ok, note};
}

Outcome replay_determinism(const fs::path& tiny_run, const fs::path& work) {
  const fs::path again = work / "tiny_replay";
  fs::remove_all(again);
  auto r = harness::replay(tiny_run / harness::files::kManifest, again);
  std::size_t csv = 0, ckpt = 0;
  for (const auto& [path, _] : harness::artifact_digests(tiny_run)) {
    csv += path.ends_with(".csv");
    ckpt += path.ends_with(".ckpt");
  }
  // Independent byte comparison of every report and checkpoint.
  std::size_t differing = 0;
  for (const auto& e : fs::recursive_directory_iterator(tiny_run)) {
    const auto ext = e.path().extension();
    if (!e.is_regular_file() || (ext != ".csv" && ext != ".ckpt" && ext != ".md")) continue;
    const auto rel = fs::relative(e.path(), tiny_run);
    if (!fs::exists(again / rel) || io::read_file(e.path()) != io::read_file(again / rel)) ++differing;
  }
  const bool pass = r.identical() && r.compared > 0 && csv > 0 && ckpt > 0 && differing == 0;
  return {pass, std::to_string(r.compared) + " artifacts compared (" + std::to_string(csv) + " CSV, " +
                    std::to_string(ckpt) + " checkpoints), " + std::to_string(r.mismatched.size()) +
                    " digest mismatches, " + std::to_string(differing) + " byte differences"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  fs::path work = fs::current_path() / "acceptance_work";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string t; std::getline(ss, t, ',');) only.insert(std::stoi(t));
    } else if (a == "--work" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance [--only 1,2,...] [--work DIR]\n");
      return 2;
    }
  }
  auto selected = [&](int id) { return only.empty() || only.count(id); };
  fs::create_directories(work);

  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
    if (!selected(id)) return;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d %s  %s: %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", name,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  report(1, "loss closed forms", closed_forms);
  report(2, "gradient correctness", gradients);
  report(3, "factscore oracle equivalence", factscore_oracle);
  report(4, "pair-construction identity", pair_identity);
  report(5, "knowledge-detection statistics", detection_stats);
  report(6, "token-shift nullity and sensitivity", token_shift_nullity);

  if (selected(7) || selected(8) || selected(9)) {
    std::vector<SeedRun> runs;
    std::string error;
    try {
      for (std::uint64_t s = 1; s <= 5; ++s) runs.push_back(run_seed(s, work));
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto guarded = [&](auto f) {
      return [&, f]() -> Outcome {
        if (!error.empty()) return {false, "experiment failed: " + error};
        return f(runs);
      };
    };
    report(7, "directional ID improvement", guarded(id_improvement));
    report(8, "directional APEFT gain", guarded(apeft_gain));
    report(9, "under-alignment diagnostic", guarded(under_alignment));
  }

  if (selected(10) || selected(11)) {
    const fs::path tiny = work / "tiny";
    std::string error;
    try {
      fs::remove_all(tiny);
      harness::run_experiment(tiny_config(), tiny);
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto need_tiny = [&](auto f) {
      return [&, f]() -> Outcome {
        if (!error.empty()) return {false, "tiny experiment failed: " + error};
        return f(tiny, work);
      };
    };
    report(10, "sweep harness integrity", need_tiny(sweep_integrity));
    report(11, "replay determinism", need_tiny(replay_determinism));
  }

  std::printf("%d criteria failed\n", failed);
  return failed ? 1 : 0;
}
