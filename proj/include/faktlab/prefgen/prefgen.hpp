#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "faktlab/io.hpp"
#include "faktlab/tinylm/decode.hpp"
#include "faktlab/world/kb.hpp"

namespace faktlab::prefgen {

enum class PrefKind { General, Atomic, RandomQa };
std::string_view pref_kind_name(PrefKind k);

/// Extra fields of a detection-prompt preference.
struct AtomicMeta {
  world::Triple triple;
  double r = 0.0;
  std::size_t k = 0;
  /// Index of the general preference the fact came from; absent for random QA.
  std::optional<std::size_t> source_pair;
};

/// (x, y_w, y_l) with factuality scores. Responses keep the sampled EOS
/// marker so they re-tokenize to exactly the sampled sequence.
struct Preference {
  PrefKind kind = PrefKind::General;
  std::string x;
  std::string y_w;
  std::string y_l;
  double f_w = 0.0;
  double f_l = 0.0;
  double q = 0.0;
  std::string entity;
  std::optional<AtomicMeta> atomic;
};

struct PromptSpec {
  std::string prompt;
  std::string entity;
};

struct ScoredResponse {
  std::string text;
  double fs = 0.0;
};

/// Seed of the i-th sample drawn under a master seed.
std::uint64_t derived_seed(std::uint64_t master, std::uint64_t index);

/// n multinomial samples; sample i uses derived_seed(spec.seed, i).
std::vector<tinylm::SampleResult> sample_response_set(const tinylm::LanguageModel& model,
                                                      std::span<const tinylm::TokenId> prompt,
                                                      std::size_t n, const tinylm::SampleSpec& spec);

/// All unordered pairs with distinct scores, higher score as y_w.
std::vector<Preference> build_pairs(const PromptSpec& prompt,
                                    const std::vector<ScoredResponse>& responses);

struct GeneralDataset {
  std::vector<Preference> pairs;
  std::vector<std::string> entities;  // prompt entities, in prompt order
  std::size_t prompts = 0;
  std::size_t responses = 0;
};

/// Prompt j samples with master seed derived_seed(spec.seed, j).
GeneralDataset build_general_dataset(const tinylm::LanguageModel& model,
                                     const std::vector<PromptSpec>& prompts, std::size_t n,
                                     const world::KnowledgeBase& kb,
                                     const tinylm::SampleSpec& spec);

enum class QualityLevel { Level1, Level2, Level3, Mixed };
std::string_view quality_level_name(QualityLevel l);
/// Level1: 0 < q <= 0.1, Level2: 0.1 < q <= 0.2, Level3: q > 0.2. The bounds
/// are closed above with a 1e-9 allowance for rounding in f_w - f_l.
QualityLevel quality_level(double q);

struct QualityGroups {
  std::array<std::vector<Preference>, 4> groups;  // indexed by QualityLevel
  std::array<std::size_t, 3> level_sizes{};       // before truncation
};

/// Partitions by level, builds Mixed by round-robin over the levels, and
/// truncates all four to the smallest level by seeded subsampling.
QualityGroups group_by_quality(const std::vector<Preference>& dataset, std::uint64_t seed);

/// Nested groups: prefixes of one seeded permutation, each kept in dataset
/// order.
std::vector<std::vector<Preference>> subsample_quantity(const std::vector<Preference>& dataset,
                                                        const std::vector<std::size_t>& sizes,
                                                        std::uint64_t seed);

io::Json preference_json(const Preference& p);
Preference preference_from_json(const io::Json& j);
void save_preferences(const std::vector<Preference>& prefs, const io::Json& header,
                      const std::filesystem::path& path);
std::vector<Preference> load_preferences(const std::filesystem::path& path,
                                         io::Json* header = nullptr);

}  // namespace faktlab::prefgen
