#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "faktlab/harness/config.hpp"
#include "faktlab/harness/eval.hpp"
#include "faktlab/io.hpp"
#include "faktlab/tokenshift/tokenshift.hpp"

namespace faktlab::harness {

namespace fs = std::filesystem;

inline constexpr const char* kManifestSchema = "faktlab.manifest/1";

/// Fixed file names inside an output directory.
namespace files {
inline constexpr const char* kKb = "kb.tsv";
inline constexpr const char* kCorpus = "corpus.jsonl";
inline constexpr const char* kQueries = "queries.jsonl";
inline constexpr const char* kBase = "base.ckpt";
inline constexpr const char* kPretrainLog = "pretrain_log.csv";
inline constexpr const char* kPrefsGeneral = "prefs_general.jsonl";
inline constexpr const char* kPrefsAtomic = "prefs_atomic.jsonl";
inline constexpr const char* kAtomicAudit = "atomic_audit.jsonl";
inline constexpr const char* kPrefsRandom = "prefs_randqa.jsonl";
inline constexpr const char* kRandomAudit = "randqa_audit.jsonl";
inline constexpr const char* kResults = "results.csv";
inline constexpr const char* kTable = "table.csv";
inline constexpr const char* kReport = "report.md";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace files

enum class Arm { General, RandomQa, Atomic };
std::string_view arm_name(Arm a);  // "general", "rand", "atom"
Arm parse_arm(std::string_view name);

/// Name of a tuned model, e.g. "dpo_atom"; the untuned model is "vanilla".
std::string run_name(preflosses::LossKind loss, Arm arm);

/// Seeds of every stage, all derived from the master seed.
struct StageSeeds {
  std::uint64_t kb, corpus, split, queries, init, pretrain, prefs, detect, randqa, mix, train,
      quantity, quality;
};
StageSeeds stage_seeds(std::uint64_t master);

/// Rethrows anything but config errors as a Stage error naming `stage`.
void run_stage(std::string_view stage, const std::function<void()>& body);

// Individual stages. Each reads its inputs from `out` and writes there.
void stage_world_gen(const ExperimentConfig& c, const fs::path& out);
void stage_pretrain(const ExperimentConfig& c, const fs::path& out);
void stage_prefs_build(const ExperimentConfig& c, const fs::path& out);
void stage_apeft_build(const ExperimentConfig& c, const fs::path& out);
/// Random-QA preferences matched in size to prefs_atomic.jsonl. Cells used
/// by the evaluation queries are excluded.
void stage_randqa_build(const ExperimentConfig& c, const fs::path& out);
/// Writes tuned/<run>.ckpt and logs/<run>_train.csv.
void stage_tune(const ExperimentConfig& c, const fs::path& out, preflosses::LossKind loss, Arm arm);
/// Evaluates base.ckpt ("vanilla") or tuned/<name>.ckpt into eval/<name>.json.
EvalReport stage_eval(const ExperimentConfig& c, const fs::path& out, const std::string& name);
/// Compares tuned/<shift.loss>_general.ckpt against base.ckpt.
tokenshift::DiagnosisReport stage_token_shift(const ExperimentConfig& c, const fs::path& out);
/// Assembles results.csv, table.csv and report.md from eval/*.json.
void stage_report(const ExperimentConfig& c, const fs::path& out);

/// Every stage in order, then manifest.json.
void run_experiment(const ExperimentConfig& c, const fs::path& out);

io::Json eval_report_json(const EvalReport& r);
EvalReport eval_report_from_json(const io::Json& j);

/// Relative path -> SHA-256 of every artifact under `out` except the manifest.
std::map<std::string, std::string> artifact_digests(const fs::path& out);

io::Json build_manifest(const ExperimentConfig& c, const fs::path& out);
ExperimentConfig manifest_config(const io::Json& manifest);

struct ReplayResult {
  std::size_t compared = 0;
  std::vector<std::string> mismatched;  // differing, missing or extra files
  bool identical() const { return mismatched.empty(); }
};

/// Re-runs the manifest's experiment into `out` and compares digests.
ReplayResult replay(const fs::path& manifest_path, const fs::path& out);

/// Tunes each loss on each group and evaluates. Writes <prefix>.csv with
/// columns group,size,loss,metric,value and <prefix>/<loss>_<metric>.csv.
/// Groups come from prefs_general.jsonl.
void sweep_quantity(const ExperimentConfig& c, const fs::path& out);
void sweep_quality(const ExperimentConfig& c, const fs::path& out);

/// Sizes of the nested quantity groups for a dataset of n pairs.
std::vector<std::size_t> quantity_sizes(const std::vector<double>& fractions, std::size_t n);

}  // namespace faktlab::harness
