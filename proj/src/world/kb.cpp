#include "faktlab/world/kb.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "faktlab/error.hpp"
#include "faktlab/io.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::world {

namespace {

constexpr std::string_view kFirst[] = {
    "Ada",    "Bruno", "Clara",  "Dmitri", "Elena", "Felix",  "Greta",  "Hugo",
    "Ingrid", "Jonas", "Karin",  "Leon",   "Mira",  "Nils",   "Olga",   "Pavel",
    "Rosa",   "Stefan", "Tilda", "Umberto", "Vera", "Walter", "Xenia",  "Yusuf",
    "Zora",   "Anton", "Beatrix", "Cyril", "Dora",  "Emil",   "Frida",  "Gustav",
    "Hedda",  "Ivo",   "Judit",  "Kasper", "Lidia", "Magnus", "Nora",   "Oskar"};
constexpr std::string_view kLast[] = {
    "Moreau",   "Lindqvist", "Okafor",  "Varga",    "Castellan", "Brandt",  "Novak",
    "Ferreira", "Halloran",  "Ibsen",   "Jankowski", "Kovacs",   "Laurent", "Mendel",
    "Nakamura", "Ortega",    "Petrov",  "Quist",    "Rinaldi",   "Sorensen", "Tamura",
    "Ulrich",   "Valente",   "Weber",   "Yilmaz",   "Zeller",    "Achterberg", "Bellini",
    "Corvin",   "Dufresne",  "Eklund",  "Falk",     "Grimaldi",  "Horvath", "Ilves",
    "Juhl",     "Kessler",   "Lazar",   "Marchetti", "Nyberg"};

constexpr std::string_view kCities[] = {"Lyon",  "Porto", "Turin", "Graz",  "Utrecht",
                                        "Bergen", "Krakow", "Seville", "Leipzig", "Ghent",
                                        "Malmo", "Brno",  "Tartu", "Cork",  "Basel",
                                        "Split", "Lille", "Bari",  "Aarhus", "Riga"};
constexpr std::string_view kOccupations[] = {"physicist", "painter",  "novelist", "composer",
                                             "sculptor",  "poet",     "chemist",  "surgeon"};
constexpr std::string_view kAwards[] = {"Aster_Medal",  "Borealis_Prize", "Calder_Award",
                                        "Dunmore_Medal", "Elgin_Prize",   "Farrow_Award",
                                        "Galen_Medal",  "Hollis_Prize",   "Ivory_Award",
                                        "Juniper_Medal"};
constexpr std::string_view kFields[] = {"optics",  "topology", "genetics",     "acoustics",
                                        "geology", "botany",   "cryptography", "linguistics"};
constexpr std::string_view kTeams[] = {"Harbor_Hawks",  "Granite_Bears", "Summit_Owls",
                                       "River_Foxes",   "Iron_Wolves",   "Coastal_Herons",
                                       "Valley_Lynx",   "Northern_Stags", "Desert_Vipers",
                                       "Meadow_Larks"};

template <std::size_t N>
std::vector<std::string> as_strings(const std::string_view (&a)[N]) {
  return {std::begin(a), std::end(a)};
}

std::vector<std::string> years(int from, int to) {
  std::vector<std::string> out;
  for (int y = from; y <= to; ++y) out.push_back(std::to_string(y));
  return out;
}

}  // namespace

KnowledgeBase::KnowledgeBase(std::vector<std::string> entities, std::vector<Objects> objects,
                             std::array<std::vector<std::string>, kNumRelations> pools)
    : entities_(std::move(entities)), objects_(std::move(objects)), pools_(std::move(pools)) {
  if (entities_.size() != objects_.size())
    fail(ErrorKind::InvalidArgument, "entity and object tables differ in length");
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (entities_[i].empty()) fail(ErrorKind::InvalidArgument, "empty entity name");
    if (!index_.emplace(entities_[i], i).second)
      fail(ErrorKind::InvalidArgument, "duplicate entity '" + entities_[i] + "'");
  }
  for (Relation r : kRelations) {
    const auto& pool = pools_[static_cast<std::size_t>(r)];
    std::set<std::string> members(pool.begin(), pool.end());
    if (members.size() != pool.size())
      fail(ErrorKind::InvalidArgument, "duplicate object in pool of " + std::string(relation_name(r)));
    for (const auto& obj : objects_)
      if (!members.count(obj[static_cast<std::size_t>(r)]))
        fail(ErrorKind::InvalidArgument, "object '" + obj[static_cast<std::size_t>(r)] +
                                             "' missing from the " +
                                             std::string(relation_name(r)) + " pool");
  }
}

std::size_t KnowledgeBase::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorKind::InvalidArgument, "unknown entity '" + name + "'");
  return it->second;
}

const std::string& KnowledgeBase::object(const std::string& entity, Relation r) const {
  return objects_[index_of(entity)][static_cast<std::size_t>(r)];
}

const std::string* KnowledgeBase::find(const std::string& entity, Relation r) const {
  auto it = index_.find(entity);
  if (it == index_.end()) return nullptr;
  return &objects_[it->second][static_cast<std::size_t>(r)];
}

Triple KnowledgeBase::triple(std::size_t i, Relation r) const {
  return {entities_.at(i), r, objects_.at(i)[static_cast<std::size_t>(r)]};
}

std::vector<Triple> KnowledgeBase::triples() const {
  std::vector<Triple> out;
  out.reserve(entities_.size() * kNumRelations);
  for (std::size_t i = 0; i < entities_.size(); ++i)
    for (Relation r : kRelations) out.push_back(triple(i, r));
  return out;
}

KnowledgeBase gen_kb(std::uint64_t seed, std::size_t num_entities) {
  constexpr std::size_t kMaxEntities = std::size(kFirst) * std::size(kLast);
  if (num_entities < 2 || num_entities > kMaxEntities)
    fail(ErrorKind::InvalidArgument,
         "num_entities must be in [2, " + std::to_string(kMaxEntities) + "]");
  Rng root = Rng(seed).split("kb");

  std::vector<std::size_t> combos(kMaxEntities);
  for (std::size_t i = 0; i < combos.size(); ++i) combos[i] = i;
  Rng names = root.split("names");
  names.shuffle(std::span(combos));
  std::vector<std::string> entities;
  for (std::size_t i = 0; i < num_entities; ++i) {
    const std::size_t c = combos[i];
    entities.push_back(std::string(kFirst[c / std::size(kLast)]) + "_" +
                       std::string(kLast[c % std::size(kLast)]));
  }

  std::array<std::vector<std::string>, kNumRelations> pools = {
      years(1901, 1940),     as_strings(kCities), as_strings(kOccupations), as_strings(kAwards),
      as_strings(kFields),   as_strings(kTeams),  entities,                 years(1961, 2000)};
  // Popularity order: a seeded permutation per relation.
  for (Relation r : kRelations) {
    Rng pr = root.split("popularity").split(static_cast<std::uint64_t>(r));
    pr.shuffle(std::span(pools[static_cast<std::size_t>(r)]));
  }

  std::vector<KnowledgeBase::Objects> objects(num_entities);
  for (std::size_t i = 0; i < num_entities; ++i) {
    Rng er = root.split("objects").split(i);
    for (Relation r : kRelations) {
      const auto& pool = pools[static_cast<std::size_t>(r)];
      std::string pick;
      if (r == Relation::Spouse) {
        std::size_t j = er.below(num_entities - 1);
        if (j >= i) ++j;
        pick = entities[j];
      } else {
        pick = pool[er.below(pool.size())];
      }
      objects[i][static_cast<std::size_t>(r)] = pick;
    }
  }
  return KnowledgeBase(std::move(entities), std::move(objects), std::move(pools));
}

std::string serialize_kb(const KnowledgeBase& kb) {
  std::string out = "# faktlab knowledge base v1\n[triples]\n";
  for (const auto& t : kb.triples()) {
    out += t.entity;
    out += '\t';
    out += relation_name(t.relation);
    out += '\t';
    out += t.object;
    out += '\n';
  }
  out += "[distractors]\n";
  for (Relation r : kRelations) {
    out += relation_name(r);
    for (const auto& o : kb.pool(r)) {
      out += '\t';
      out += o;
    }
    out += '\n';
  }
  return out;
}

KnowledgeBase parse_kb(std::string_view text) {
  std::vector<std::string> entities;
  std::vector<KnowledgeBase::Objects> objects;
  std::array<std::vector<std::string>, kNumRelations> pools;
  std::array<bool, kNumRelations> have_pool{};
  std::vector<std::array<bool, kNumRelations>> seen;
  std::unordered_map<std::string, std::size_t> idx;
  enum { None, Triples, Pools } section = None;

  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto bad = [&](const std::string& msg) {
    fail(ErrorKind::Io, "kb line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line == "[triples]") { section = Triples; continue; }
    if (line == "[distractors]") { section = Pools; continue; }
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (section == Triples) {
      if (f.size() != 3) bad("expected entity, relation, object");
      const auto r = static_cast<std::size_t>(parse_relation(f[1]));
      auto [it, fresh] = idx.emplace(f[0], entities.size());
      if (fresh) {
        entities.push_back(f[0]);
        objects.emplace_back();
        seen.emplace_back();
      }
      if (seen[it->second][r]) bad("duplicate (entity, relation)");
      seen[it->second][r] = true;
      objects[it->second][r] = f[2];
    } else if (section == Pools) {
      if (f.size() < 2) bad("empty distractor pool");
      const auto r = static_cast<std::size_t>(parse_relation(f[0]));
      pools[r].assign(f.begin() + 1, f.end());
      have_pool[r] = true;
    } else {
      bad("content outside a section");
    }
  }
  for (const auto& s : seen)
    for (bool b : s)
      if (!b) fail(ErrorKind::Io, "kb is not total: some (entity, relation) has no object");
  for (bool b : have_pool)
    if (!b) fail(ErrorKind::Io, "kb lacks a distractor pool");
  return KnowledgeBase(std::move(entities), std::move(objects), std::move(pools));
}

void save_kb(const KnowledgeBase& kb, const std::filesystem::path& path) {
  io::write_file(path, serialize_kb(kb));
}

KnowledgeBase load_kb(const std::filesystem::path& path) { return parse_kb(io::read_file(path)); }

tinylm::Vocab build_vocab(const KnowledgeBase& kb) {
  tinylm::Vocab v;
  for (const auto& w : grammar_words()) v.add(w);
  for (const auto& e : kb.entities()) v.add(e);
  for (Relation r : kRelations)
    for (const auto& o : kb.pool(r)) v.add(o);
  return v;
}

}  // namespace faktlab::world
