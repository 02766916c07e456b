#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faktlab/apeft/apeft.hpp"
#include "faktlab/harness/eval.hpp"
#include "faktlab/harness/pretrain.hpp"
#include "faktlab/io.hpp"
#include "faktlab/preflosses/tune.hpp"
#include "faktlab/tinylm/model.hpp"
#include "faktlab/tokenshift/tokenshift.hpp"
#include "faktlab/world/corpus.hpp"
#include "faktlab/world/queries.hpp"

namespace faktlab::harness {

inline constexpr const char* kConfigSchema = "faktlab.config/1";

struct PrefsConfig {
  std::size_t preference_entities = 60;
  std::size_t responses_per_prompt = 6;
  double temperature = 1.0;
  std::size_t max_len = 48;
};

struct ArmsConfig {
  bool general = true;
  bool random_qa = true;
  bool atomic = true;
};

struct ShiftConfig {
  preflosses::LossKind loss = preflosses::LossKind::Dpo;
  tokenshift::ShiftBasis basis = tokenshift::ShiftBasis::Signed;
  std::size_t max_len = 48;
};

struct SweepConfig {
  /// Quantity groups as fractions of the general dataset, ascending.
  std::vector<double> quantity_fractions = {0.25, 0.5, 0.75, 1.0};
};

/// Every knob of a run. Component seeds derive from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  world::CorpusSpec world;
  tinylm::ModelConfig model;  // vocab_size and seed are filled in at run time
  PretrainConfig pretrain;
  world::QuerySizes queries;
  PrefsConfig prefs;
  apeft::DetectionSpec detection;  // seed derived
  std::vector<preflosses::LossKind> losses;
  preflosses::LossConfig loss;  // kind ignored, one run per entry of `losses`
  preflosses::TrainConfig train;
  ArmsConfig arms;
  EvalSpec eval;
  ShiftConfig shift;
  SweepConfig sweeps;

  static ExperimentConfig defaults();
  void validate() const;
};

io::Json config_to_json(const ExperimentConfig& c);
/// Missing keys keep their defaults; unknown keys and a wrong schema are
/// config errors.
ExperimentConfig config_from_json(const io::Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Stable per-component seed.
std::uint64_t component_seed(std::uint64_t master, std::string_view component);

}  // namespace faktlab::harness
