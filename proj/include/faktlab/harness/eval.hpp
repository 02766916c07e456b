#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "faktlab/tinylm/decode.hpp"
#include "faktlab/world/kb.hpp"
#include "faktlab/world/queries.hpp"

namespace faktlab::harness {

struct EvalSpec {
  std::size_t max_len = 48;
};

struct LongFormScore {
  double fs = 0.0;
  double nc = 0.0;  // mean supported facts per response
  double ne = 0.0;  // mean contradicted facts per response
  std::size_t empty = 0;
  std::size_t prompts = 0;
};

/// Greedy generation per prompt, FActScore per response, means over prompts.
LongFormScore eval_long_form(const tinylm::LanguageModel& model,
                             const std::vector<world::Query>& queries,
                             const world::KnowledgeBase& kb, const EvalSpec& spec = {});

/// Fraction of greedy responses that open with PREMISE_FALSE.
double eval_false_premise(const tinylm::LanguageModel& model,
                          const std::vector<world::Query>& queries, const EvalSpec& spec = {});

/// Case-folded, punctuation removed, whitespace collapsed.
std::string normalize_answer(std::string_view text);
/// Whole-word containment of the normalized gold in the normalized response.
bool answer_matches(std::string_view response, std::string_view gold);

double eval_short_qa(const tinylm::LanguageModel& model, const std::vector<world::Query>& queries,
                     const EvalSpec& spec = {});

struct EvalReport {
  LongFormScore bio;
  LongFormScore fava;
  double fp_acc = 0.0;
  double kqa_acc = 0.0;

  /// Unweighted mean of bio FS, fava FS, FP accuracy and KQA accuracy.
  double avg() const { return (bio.fs + fava.fs + fp_acc + kqa_acc) / 4.0; }
};

EvalReport evaluate(const tinylm::LanguageModel& model, const world::QuerySets& queries,
                    const world::KnowledgeBase& kb, const EvalSpec& spec = {});

/// Metric names in report order and their values.
std::vector<std::string> metric_names();
std::vector<double> metric_values(const EvalReport& r);

}  // namespace faktlab::harness
