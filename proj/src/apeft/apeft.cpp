#include "faktlab/apeft/apeft.hpp"

#include <algorithm>
#include <map>

#include "faktlab/error.hpp"
#include "faktlab/rng.hpp"
#include "faktlab/world/grammar.hpp"

namespace faktlab::apeft {

using tinylm::TokenId;
using tinylm::Vocab;

std::vector<PrefFact> extract_pref_facts(const std::vector<prefgen::Preference>& dataset) {
  std::vector<PrefFact> out;
  std::set<world::Triple> seen;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    for (const auto* y : {&dataset[i].y_w, &dataset[i].y_l})
      for (auto& f : factuality::extract_atomic_facts(*y).facts)
        if (seen.insert(f.triple).second) out.push_back({std::move(f), i});
  return out;
}

KnowledgeProbe true_false_probe(const PrefFact& fact, const world::KnowledgeBase& kb) {
  KnowledgeProbe p;
  p.kind = ProbeKind::TrueFalse;
  p.fact = fact.fact.triple;
  p.prompt = world::probe_prompt(fact.fact.sentence);
  p.gold = factuality::verify_fact(p.fact, kb) == factuality::Verdict::Supported;
  p.source_pair = fact.source_pair;
  return p;
}

KnowledgeProbe short_answer_probe(const world::KnowledgeBase& kb, const std::string& entity,
                                  world::Relation r) {
  KnowledgeProbe p;
  p.kind = ProbeKind::ShortAnswer;
  p.fact = {entity, r, kb.object(entity, r)};
  p.prompt = world::kqa_question(entity, r);
  p.gold = true;
  p.gold_answer = p.fact.object;
  return p;
}

std::string_view knowledge_status_name(KnowledgeStatus s) {
  switch (s) {
    case KnowledgeStatus::Unknown: return "unknown";
    case KnowledgeStatus::PotentiallyKnown: return "potentially_known";
    case KnowledgeStatus::Known: return "known";
  }
  return "?";
}

KnowledgeStatus status_for(std::size_t correct, std::size_t k) {
  if (correct > k) fail(ErrorKind::InvalidArgument, "more correct answers than samples");
  if (correct == 0) return KnowledgeStatus::Unknown;
  if (correct == k) return KnowledgeStatus::Known;
  return KnowledgeStatus::PotentiallyKnown;
}

void DetectionSpec::validate() const {
  if (k < 2) fail(ErrorKind::InvalidArgument, "knowledge detection needs k >= 2");
  if (!(temperature > 0.0)) fail(ErrorKind::InvalidArgument, "temperature must be positive");
  if (max_answer_len < 2) fail(ErrorKind::InvalidArgument, "max_answer_len must be >= 2");
}

namespace {

enum class Judgement { Correct, Incorrect, Unparseable };

Judgement judge(const KnowledgeProbe& probe, std::span<const TokenId> answer, const Vocab& vocab) {
  if (probe.kind == ProbeKind::TrueFalse) {
    if (answer.empty() || (answer[0] != Vocab::kTrueId && answer[0] != Vocab::kFalseId))
      return Judgement::Unparseable;
    return (answer[0] == Vocab::kTrueId) == probe.gold ? Judgement::Correct : Judgement::Incorrect;
  }
  for (TokenId t : answer)
    if (t != Vocab::kEosId && vocab.token(t) == probe.gold_answer) return Judgement::Correct;
  return Judgement::Incorrect;
}

}  // namespace

DetectionResult detect_knowledge(const tinylm::LanguageModel& model, const KnowledgeProbe& probe,
                                 const DetectionSpec& spec) {
  spec.validate();
  const auto& vocab = model.vocab();
  const auto prompt = vocab.encode(probe.prompt);
  const std::uint64_t master = Rng(spec.seed).split("detect").split(probe.prompt).key();
  const bool constrained = spec.constrained && probe.kind == ProbeKind::TrueFalse;

  DetectionResult out;
  out.k = spec.k;
  for (std::size_t i = 0; i < spec.k; ++i) {
    tinylm::SampleSpec s;
    s.strategy = tinylm::Strategy::Multinomial;
    s.temperature = spec.temperature;
    s.seed = prefgen::derived_seed(master, i);
    s.max_len = spec.max_answer_len;
    if (constrained) {
      s.max_len = 1;
      s.allowed = {Vocab::kTrueId, Vocab::kFalseId};
    }
    auto answer = tinylm::sample(model, prompt, s).tokens;
    if (constrained) answer.push_back(Vocab::kEosId);
    const auto j = judge(probe, answer, vocab);
    out.correct += j == Judgement::Correct;
    out.unparseable += j == Judgement::Unparseable;
    out.judged_correct.push_back(j == Judgement::Correct);
    out.transcripts.push_back(vocab.decode(answer));
  }
  out.r = static_cast<double>(out.correct) / static_cast<double>(spec.k);
  out.status = status_for(out.correct, spec.k);
  return out;
}

std::vector<io::Json> AtomicBuild::audit() const {
  std::vector<io::Json> out;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    const auto& d = detections[i];
    out.push_back({{"prompt", p.prompt},
                   {"triple", {p.fact.entity, std::string(world::relation_name(p.fact.relation)),
                               p.fact.object}},
                   {"gold", p.kind == ProbeKind::TrueFalse ? io::Json(p.gold)
                                                           : io::Json(p.gold_answer)},
                   {"r", d.r},
                   {"status", std::string(knowledge_status_name(d.status))},
                   {"unparseable", d.unparseable},
                   {"transcripts", d.transcripts},
                   {"correct", d.judged_correct}});
  }
  return out;
}

namespace {

std::optional<prefgen::Preference> to_preference(const KnowledgeProbe& probe,
                                                 const DetectionResult& d) {
  if (d.status != KnowledgeStatus::PotentiallyKnown) return std::nullopt;
  const auto w = std::find(d.judged_correct.begin(), d.judged_correct.end(), true);
  const auto l = std::find(d.judged_correct.begin(), d.judged_correct.end(), false);
  prefgen::Preference p;
  p.kind = probe.kind == ProbeKind::TrueFalse ? prefgen::PrefKind::Atomic
                                              : prefgen::PrefKind::RandomQa;
  p.x = probe.prompt;
  p.y_w = d.transcripts[static_cast<std::size_t>(w - d.judged_correct.begin())];
  p.y_l = d.transcripts[static_cast<std::size_t>(l - d.judged_correct.begin())];
  p.f_w = 1.0;
  p.f_l = 0.0;
  p.q = 1.0;
  p.entity = probe.fact.entity;
  p.atomic = prefgen::AtomicMeta{probe.fact, d.r, d.k, probe.source_pair};
  return p;
}

void add_probe(AtomicBuild& b, const tinylm::LanguageModel& model, const KnowledgeProbe& probe,
               const DetectionSpec& spec) {
  auto d = detect_knowledge(model, probe, spec);
  ++b.status_counts[static_cast<std::size_t>(d.status)];
  if (auto p = to_preference(probe, d)) b.prefs.push_back(std::move(*p));
  b.probes.push_back(probe);
  b.detections.push_back(std::move(d));
}

}  // namespace

AtomicBuild build_atomic_prefs(const tinylm::LanguageModel& model,
                               const std::vector<KnowledgeProbe>& probes,
                               const DetectionSpec& spec) {
  AtomicBuild b;
  for (const auto& p : probes) add_probe(b, model, p, spec);
  return b;
}

std::vector<prefgen::Preference> mix(const std::vector<prefgen::Preference>& general,
                                     const std::vector<prefgen::Preference>& atomic,
                                     std::uint64_t seed) {
  auto out = general;
  out.insert(out.end(), atomic.begin(), atomic.end());
  if (!atomic.empty()) Rng(seed).split("mix").shuffle(std::span(out));
  return out;
}

RandomQaBuild build_random_qa_prefs(const tinylm::LanguageModel& model,
                                    const world::KnowledgeBase& kb,
                                    const std::vector<std::string>& entities,
                                    const DetectionSpec& spec, std::size_t target_size,
                                    const std::set<std::pair<std::string, world::Relation>>& exclude) {
  std::vector<std::pair<std::string, world::Relation>> cells;
  for (const auto& e : entities) {
    if (!kb.has_entity(e)) fail(ErrorKind::InvalidArgument, "unknown entity '" + e + "'");
    for (auto r : world::kRelations)
      if (!exclude.count({e, r})) cells.emplace_back(e, r);
  }
  Rng(spec.seed).split("random-qa").shuffle(std::span(cells));

  RandomQaBuild out;
  out.target_size = target_size;
  for (const auto& [e, r] : cells) {
    if (out.build.prefs.size() >= target_size) break;
    add_probe(out.build, model, short_answer_probe(kb, e, r), spec);
  }
  out.shortfall = out.build.prefs.size() < target_size;
  return out;
}

}  // namespace faktlab::apeft
