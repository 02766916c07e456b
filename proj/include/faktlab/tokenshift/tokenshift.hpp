#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "faktlab/tinylm/decode.hpp"

namespace faktlab::tokenshift {

using tinylm::TokenId;

struct ShiftRecord {
  std::size_t prompt_id = 0;
  std::size_t position = 0;
  double relative_position = 0.0;  // position / response length
  TokenId token = 0;
  std::size_t rank_aligned = 0;
  std::size_t rank_base = 0;
  std::int64_t delta = 0;  // rank_base - rank_aligned
};

struct AnalysisSpec {
  std::size_t max_len = 48;
};

/// The aligned model decodes each prompt greedily; every emitted token (EOS
/// included) is ranked in both models' next-token distributions at the same
/// context.
std::vector<ShiftRecord> analyze(const tinylm::LanguageModel& aligned,
                                 const tinylm::LanguageModel& base,
                                 const std::vector<std::string>& prompts,
                                 const AnalysisSpec& spec = {});

/// Delta levels: <0, 0, 1-2, 3-10, 11-100, >100.
inline constexpr std::size_t kNumLevels = 6;
inline constexpr std::array<const char*, kNumLevels> kLevelNames = {"<0",    "0",      "1-2",
                                                                    "3-10", "11-100", ">100"};
std::size_t delta_level(std::int64_t delta);

struct ShiftHistogram {
  std::size_t buckets = 10;
  std::vector<std::array<std::size_t, kNumLevels>> counts;  // [bucket][level]
  std::size_t total = 0;
  double shifted_rate = 0.0;      // delta > 0
  double abs_shifted_rate = 0.0;  // delta != 0

  double frequency(std::size_t bucket, std::size_t level) const;
};

ShiftHistogram histogram(const std::vector<ShiftRecord>& records, std::size_t buckets = 10);

enum class ShiftBasis { Signed, Absolute };
enum class Verdict { UnderAlignment, Inconclusive };
std::string_view verdict_name(Verdict v);

struct DiagnosisReport {
  double shifted_rate_id = 0.0;
  double shifted_rate_ood = 0.0;
  double abs_rate_id = 0.0;
  double abs_rate_ood = 0.0;
  ShiftBasis basis = ShiftBasis::Signed;
  double ratio = 0.0;  // ood / id on the chosen basis
  Verdict verdict = Verdict::Inconclusive;

  std::string summary() const;
};

DiagnosisReport diagnose(const ShiftHistogram& id, const ShiftHistogram& ood,
                         ShiftBasis basis = ShiftBasis::Signed);
DiagnosisReport diagnose(const std::vector<ShiftRecord>& id, const std::vector<ShiftRecord>& ood,
                         ShiftBasis basis = ShiftBasis::Signed);

std::string records_csv(const std::vector<ShiftRecord>& records);
std::string histogram_csv(const ShiftHistogram& h);
/// Stacked bars of the shifted levels per position bucket.
std::string histogram_svg(const ShiftHistogram& h, const std::string& title);

}  // namespace faktlab::tokenshift
