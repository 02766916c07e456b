#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "faktlab/factuality/factscore.hpp"
#include "faktlab/io.hpp"
#include "faktlab/prefgen/prefgen.hpp"
#include "faktlab/tinylm/decode.hpp"
#include "faktlab/world/kb.hpp"

namespace faktlab::apeft {

/// A fact found in a preference response, with the first pair it came from.
struct PrefFact {
  factuality::AtomicFact fact;
  std::size_t source_pair = 0;
};

/// Facts of both y_w and y_l of every pair, first occurrence per triple kept.
std::vector<PrefFact> extract_pref_facts(const std::vector<prefgen::Preference>& dataset);

enum class ProbeKind { TrueFalse, ShortAnswer };

struct KnowledgeProbe {
  ProbeKind kind = ProbeKind::TrueFalse;
  world::Triple fact;
  std::string prompt;
  /// TrueFalse: whether the fact holds in the KB.
  bool gold = false;
  /// ShortAnswer: the KB object.
  std::string gold_answer;
  std::optional<std::size_t> source_pair;
};

/// "True or false : <sentence> Answer :" with gold from verify_fact.
KnowledgeProbe true_false_probe(const PrefFact& fact, const world::KnowledgeBase& kb);
/// Single-relation question about (entity, r) answered by the KB object.
KnowledgeProbe short_answer_probe(const world::KnowledgeBase& kb, const std::string& entity,
                                  world::Relation r);

enum class KnowledgeStatus { Unknown, PotentiallyKnown, Known };
std::string_view knowledge_status_name(KnowledgeStatus s);
KnowledgeStatus status_for(std::size_t correct, std::size_t k);

struct DetectionSpec {
  std::size_t k = 16;
  double temperature = 1.0;
  /// Restrict true/false answers to the TRUE and FALSE tokens.
  bool constrained = true;
  /// Token budget for an answer including EOS.
  std::size_t max_answer_len = 4;
  std::uint64_t seed = 0;

  void validate() const;
};

struct DetectionResult {
  double r = 0.0;
  std::size_t k = 0;
  std::size_t correct = 0;
  std::size_t unparseable = 0;
  KnowledgeStatus status = KnowledgeStatus::Unknown;
  std::vector<std::string> transcripts;
  std::vector<bool> judged_correct;
};

/// k temperature sampled answers. The sample seeds derive from spec.seed and
/// the probe prompt, so a probe's transcripts do not depend on probe order.
DetectionResult detect_knowledge(const tinylm::LanguageModel& model, const KnowledgeProbe& probe,
                                 const DetectionSpec& spec);

struct AtomicBuild {
  std::vector<prefgen::Preference> prefs;
  std::vector<KnowledgeProbe> probes;
  std::vector<DetectionResult> detections;  // parallel to probes
  std::array<std::size_t, 3> status_counts{};

  /// One record per probe with every transcript.
  std::vector<io::Json> audit() const;
};

/// Potentially-known probes become (probe prompt, first correct transcript,
/// first incorrect transcript) preferences.
AtomicBuild build_atomic_prefs(const tinylm::LanguageModel& model,
                               const std::vector<KnowledgeProbe>& probes,
                               const DetectionSpec& spec);

/// Concatenation shuffled under seed.
std::vector<prefgen::Preference> mix(const std::vector<prefgen::Preference>& general,
                                     const std::vector<prefgen::Preference>& atomic,
                                     std::uint64_t seed);

struct RandomQaBuild {
  AtomicBuild build;
  std::size_t target_size = 0;
  bool shortfall = false;
};

/// Short-answer probes about the given entities, visited in a seeded random
/// order with excluded (entity, relation) cells skipped; stops once
/// target_size potentially-known probes are found.
RandomQaBuild build_random_qa_prefs(const tinylm::LanguageModel& model,
                                    const world::KnowledgeBase& kb,
                                    const std::vector<std::string>& entities,
                                    const DetectionSpec& spec, std::size_t target_size,
                                    const std::set<std::pair<std::string, world::Relation>>& exclude);

}  // namespace faktlab::apeft
