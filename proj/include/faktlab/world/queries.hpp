#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "faktlab/world/kb.hpp"

namespace faktlab::world {

struct Query {
  std::string id;
  std::string entity;
  std::string prompt;
  /// open: the two requested relations; fp / kqa: the asked relation.
  std::vector<Relation> relations;
  /// kqa: the KB object; fp: the KB object the premise contradicts.
  std::string gold;
  /// fp only: the object embedded in the question.
  std::string premise_object;
  bool premise_false = false;
};

struct QuerySizes {
  std::size_t id_bio = 0;  // 0: every held-out entity
  std::size_t ood_open = 60;
  std::size_t ood_fp = 100;
  std::size_t ood_kqa = 100;
};

/// Evaluation queries. id_bio covers entities outside the preference split;
/// the OOD sets draw subjects from the whole KB.
struct QuerySets {
  std::vector<Query> id_bio;
  std::vector<Query> ood_open;
  std::vector<Query> ood_fp;
  std::vector<Query> ood_kqa;
  std::vector<std::string> preference_entities;
  std::vector<std::string> heldout_entities;
};

/// Seeded choice of `count` entities used for preference prompts.
std::vector<std::string> choose_preference_entities(const KnowledgeBase& kb, std::size_t count,
                                                    std::uint64_t seed);

QuerySets gen_queries(const KnowledgeBase& kb, const std::vector<std::string>& preference_entities,
                      std::uint64_t seed, const QuerySizes& sizes = {});

void save_queries(const QuerySets& q, const std::filesystem::path& path);
QuerySets load_queries(const std::filesystem::path& path);

}  // namespace faktlab::world
