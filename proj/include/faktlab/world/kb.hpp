#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "faktlab/tinylm/vocab.hpp"
#include "faktlab/world/grammar.hpp"

namespace faktlab::world {

/// Functional subject-relation-object store. Each relation's distractor pool
/// lists every admissible object in popularity order (most popular first).
class KnowledgeBase {
 public:
  using Objects = std::array<std::string, kNumRelations>;

  KnowledgeBase(std::vector<std::string> entities, std::vector<Objects> objects,
                std::array<std::vector<std::string>, kNumRelations> pools);

  const std::vector<std::string>& entities() const noexcept { return entities_; }
  std::size_t size() const noexcept { return entities_.size(); }
  bool has_entity(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t index_of(const std::string& name) const;

  const std::string& object(const std::string& entity, Relation r) const;
  /// nullptr when the entity is unknown.
  const std::string* find(const std::string& entity, Relation r) const;
  const std::vector<std::string>& pool(Relation r) const {
    return pools_[static_cast<std::size_t>(r)];
  }

  Triple triple(std::size_t entity_index, Relation r) const;
  /// Entity-major, relations in schema order.
  std::vector<Triple> triples() const;

  bool operator==(const KnowledgeBase& o) const {
    return entities_ == o.entities_ && objects_ == o.objects_ && pools_ == o.pools_;
  }

 private:
  std::vector<std::string> entities_;
  std::vector<Objects> objects_;
  std::array<std::vector<std::string>, kNumRelations> pools_;
  std::unordered_map<std::string, std::size_t> index_;
};

KnowledgeBase gen_kb(std::uint64_t seed, std::size_t num_entities);

/// Text form: a [triples] section of tab-separated entity, relation, object
/// lines and a [distractors] section of relation followed by its pool.
std::string serialize_kb(const KnowledgeBase& kb);
KnowledgeBase parse_kb(std::string_view text);
void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path);
KnowledgeBase load_kb(const std::filesystem::path& path);

/// Specials, grammar words, entities, then every pool object.
tinylm::Vocab build_vocab(const KnowledgeBase& kb);

}  // namespace faktlab::world
