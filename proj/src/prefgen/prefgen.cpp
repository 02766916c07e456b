#include "faktlab/prefgen/prefgen.hpp"

#include <algorithm>
#include <numeric>

#include "faktlab/error.hpp"
#include "faktlab/factuality/factscore.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::prefgen {

std::string_view pref_kind_name(PrefKind k) {
  switch (k) {
    case PrefKind::General: return "general";
    case PrefKind::Atomic: return "atomic";
    case PrefKind::RandomQa: return "random_qa";
  }
  return "?";
}

std::uint64_t derived_seed(std::uint64_t master, std::uint64_t index) {
  return Rng(master).split("sample").split(index).key();
}

std::vector<tinylm::SampleResult> sample_response_set(const tinylm::LanguageModel& model,
                                                      std::span<const tinylm::TokenId> prompt,
                                                      std::size_t n,
                                                      const tinylm::SampleSpec& spec) {
  if (n < 2) fail(ErrorKind::InvalidArgument, "need at least two responses per prompt");
  std::vector<tinylm::SampleResult> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto s = spec;
    s.strategy = tinylm::Strategy::Multinomial;
    s.seed = derived_seed(spec.seed, i);
    out.push_back(tinylm::sample(model, prompt, s));
  }
  return out;
}

std::vector<Preference> build_pairs(const PromptSpec& prompt,
                                    const std::vector<ScoredResponse>& responses) {
  std::vector<Preference> out;
  for (std::size_t i = 0; i < responses.size(); ++i)
    for (std::size_t j = i + 1; j < responses.size(); ++j) {
      const auto& a = responses[i];
      const auto& b = responses[j];
      if (a.fs == b.fs) continue;
      const auto& w = a.fs > b.fs ? a : b;
      const auto& l = a.fs > b.fs ? b : a;
      out.push_back({PrefKind::General, prompt.prompt, w.text, l.text, w.fs, l.fs, w.fs - l.fs,
                     prompt.entity, std::nullopt});
    }
  return out;
}

GeneralDataset build_general_dataset(const tinylm::LanguageModel& model,
                                     const std::vector<PromptSpec>& prompts, std::size_t n,
                                     const world::KnowledgeBase& kb,
                                     const tinylm::SampleSpec& spec) {
  GeneralDataset ds;
  const auto& vocab = model.vocab();
  for (std::size_t j = 0; j < prompts.size(); ++j) {
    auto s = spec;
    s.seed = derived_seed(spec.seed, j);
    auto samples = sample_response_set(model, vocab.encode(prompts[j].prompt), n, s);
    std::vector<ScoredResponse> scored;
    for (const auto& r : samples) {
      auto text = vocab.decode(r.tokens);
      scored.push_back({text, factuality::factscore(text, kb).fs});
    }
    auto pairs = build_pairs(prompts[j], scored);
    ds.pairs.insert(ds.pairs.end(), pairs.begin(), pairs.end());
    ds.entities.push_back(prompts[j].entity);
    ds.responses += samples.size();
  }
  ds.prompts = prompts.size();
  return ds;
}

std::string_view quality_level_name(QualityLevel l) {
  switch (l) {
    case QualityLevel::Level1: return "level1";
    case QualityLevel::Level2: return "level2";
    case QualityLevel::Level3: return "level3";
    case QualityLevel::Mixed: return "mixed";
  }
  return "?";
}

QualityLevel quality_level(double q) {
  constexpr double kTol = 1e-9;
  if (!(q > 0.0)) fail(ErrorKind::InvalidArgument, "quality score must be positive");
  if (q <= 0.1 + kTol) return QualityLevel::Level1;
  if (q <= 0.2 + kTol) return QualityLevel::Level2;
  return QualityLevel::Level3;
}

namespace {

// Seeded subset of `count` indices kept in ascending order.
std::vector<std::size_t> pick(std::size_t n, std::size_t count, Rng rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  rng.shuffle(std::span(idx));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

QualityGroups group_by_quality(const std::vector<Preference>& dataset, std::uint64_t seed) {
  std::array<std::vector<const Preference*>, 3> levels;
  for (const auto& p : dataset) levels[static_cast<std::size_t>(quality_level(p.q))].push_back(&p);
  QualityGroups out;
  for (std::size_t l = 0; l < 3; ++l) {
    out.level_sizes[l] = levels[l].size();
    if (levels[l].empty())
      fail(ErrorKind::InvalidArgument,
           "quality level " + std::string(quality_level_name(static_cast<QualityLevel>(l))) +
               " is empty");
  }
  const std::size_t m = *std::min_element(out.level_sizes.begin(), out.level_sizes.end());
  const Rng root = Rng(seed).split("quality");
  for (std::size_t l = 0; l < 3; ++l)
    for (auto i : pick(levels[l].size(), m, root.split(l)))
      out.groups[l].push_back(*levels[l][i]);

  std::array<std::vector<std::size_t>, 3> order;
  for (std::size_t l = 0; l < 3; ++l) {
    order[l].resize(levels[l].size());
    std::iota(order[l].begin(), order[l].end(), std::size_t{0});
    root.split("mixed").split(l).shuffle(std::span(order[l]));
  }
  auto& mixed = out.groups[3];
  for (std::size_t k = 0; mixed.size() < m; ++k)
    for (std::size_t l = 0; l < 3 && mixed.size() < m; ++l)
      mixed.push_back(*levels[l][order[l][k]]);
  return out;
}

std::vector<std::vector<Preference>> subsample_quantity(const std::vector<Preference>& dataset,
                                                        const std::vector<std::size_t>& sizes,
                                                        std::uint64_t seed) {
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > dataset.size())
      fail(ErrorKind::InvalidArgument, "group size " + std::to_string(sizes[i]) +
                                           " exceeds dataset of " + std::to_string(dataset.size()));
    if (i && sizes[i] < sizes[i - 1]) fail(ErrorKind::InvalidArgument, "sizes must be ascending");
  }
  std::vector<std::size_t> perm(dataset.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng(seed).split("quantity").shuffle(std::span(perm));
  std::vector<std::vector<Preference>> out;
  for (auto s : sizes) {
    std::vector<std::size_t> idx(perm.begin(), perm.begin() + static_cast<long>(s));
    std::sort(idx.begin(), idx.end());
    std::vector<Preference> g;
    for (auto i : idx) g.push_back(dataset[i]);
    out.push_back(std::move(g));
  }
  return out;
}

io::Json preference_json(const Preference& p) {
  io::Json j = {{"kind", std::string(pref_kind_name(p.kind))},
                {"prompt", p.x},
                {"y_w", p.y_w},
                {"y_l", p.y_l},
                {"f_w", p.f_w},
                {"f_l", p.f_l},
                {"q", p.q},
                {"entity", p.entity}};
  if (p.atomic) {
    const auto& a = *p.atomic;
    j["triple"] = {a.triple.entity, std::string(world::relation_name(a.triple.relation)),
                   a.triple.object};
    j["r"] = a.r;
    j["k"] = a.k;
    j["source_pair"] = a.source_pair ? io::Json(*a.source_pair) : io::Json(nullptr);
  }
  return j;
}

Preference preference_from_json(const io::Json& j) {
  Preference p;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "general") p.kind = PrefKind::General;
  else if (kind == "atomic") p.kind = PrefKind::Atomic;
  else if (kind == "random_qa") p.kind = PrefKind::RandomQa;
  else fail(ErrorKind::Io, "unknown preference kind '" + kind + "'");
  p.x = j.at("prompt").get<std::string>();
  p.y_w = j.at("y_w").get<std::string>();
  p.y_l = j.at("y_l").get<std::string>();
  p.f_w = j.at("f_w").get<double>();
  p.f_l = j.at("f_l").get<double>();
  p.q = j.at("q").get<double>();
  p.entity = j.at("entity").get<std::string>();
  if (j.contains("triple")) {
    AtomicMeta a;
    const auto& t = j.at("triple");
    a.triple = {t.at(0).get<std::string>(), world::parse_relation(t.at(1).get<std::string>()),
                t.at(2).get<std::string>()};
    a.r = j.at("r").get<double>();
    a.k = j.at("k").get<std::size_t>();
    if (!j.at("source_pair").is_null()) a.source_pair = j.at("source_pair").get<std::size_t>();
    p.atomic = a;
  }
  return p;
}

void save_preferences(const std::vector<Preference>& prefs, const io::Json& header,
                      const std::filesystem::path& path) {
  io::Json h = header;
  h["schema"] = "faktlab.prefs/1";
  h["count"] = prefs.size();
  std::vector<io::Json> recs;
  recs.reserve(prefs.size());
  for (const auto& p : prefs) recs.push_back(preference_json(p));
  io::write_jsonl(path, h, recs);
}

std::vector<Preference> load_preferences(const std::filesystem::path& path, io::Json* header) {
  auto jl = io::read_jsonl(path, "faktlab.prefs/1");
  if (header) *header = jl.header;
  std::vector<Preference> out;
  for (const auto& r : jl.records) out.push_back(preference_from_json(r));
  return out;
}

}  // namespace faktlab::prefgen
