#include "faktlab/world/queries.hpp"

#include <algorithm>
#include <set>

#include "faktlab/error.hpp"
#include "faktlab/io.hpp"
#include "faktlab/rng.hpp"

namespace faktlab::world {

std::vector<std::string> choose_preference_entities(const KnowledgeBase& kb, std::size_t count,
                                                    std::uint64_t seed) {
  if (count >= kb.size())
    fail(ErrorKind::Config, "preference entities would exhaust the KB (" +
                                std::to_string(count) + " of " + std::to_string(kb.size()) + ")");
  std::vector<std::size_t> idx(kb.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng(seed).split("preference-entities").shuffle(std::span(idx));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  std::vector<std::string> out;
  for (auto i : idx) out.push_back(kb.entities()[i]);
  return out;
}

QuerySets gen_queries(const KnowledgeBase& kb, const std::vector<std::string>& preference_entities,
                      std::uint64_t seed, const QuerySizes& sizes) {
  std::set<std::string> pref(preference_entities.begin(), preference_entities.end());
  for (const auto& e : pref)
    if (!kb.has_entity(e)) fail(ErrorKind::InvalidArgument, "preference entity '" + e + "' not in KB");
  QuerySets q;
  q.preference_entities.assign(pref.begin(), pref.end());
  for (const auto& e : kb.entities())
    if (!pref.count(e)) q.heldout_entities.push_back(e);
  if (q.heldout_entities.empty())
    fail(ErrorKind::InvalidArgument, "preference entities exhaust the KB");

  const Rng root = Rng(seed).split("queries");

  std::vector<std::string> bio = q.heldout_entities;
  if (sizes.id_bio && sizes.id_bio < bio.size()) {
    Rng br = root.split("bio");
    br.shuffle(std::span(bio));
    bio.resize(sizes.id_bio);
  }
  for (std::size_t i = 0; i < bio.size(); ++i)
    q.id_bio.push_back({"bio-" + std::to_string(i), bio[i], bio_prompt(bio[i]), {}, {}, {}, false});

  Rng orr = root.split("open");
  for (std::size_t i = 0; i < sizes.ood_open; ++i) {
    const auto& e = kb.entities()[orr.below(kb.size())];
    const Relation a = kRelations[orr.below(kNumRelations)];
    Relation b = kRelations[orr.below(kNumRelations - 1)];
    if (static_cast<std::size_t>(b) >= static_cast<std::size_t>(a))
      b = kRelations[static_cast<std::size_t>(b) + 1];
    q.ood_open.push_back({"open-" + std::to_string(i), e, open_prompt(e, a, b), {a, b}, {}, {}, false});
  }

  // fp and kqa items are distinct (entity, relation) cells.
  auto cells = [&](std::string_view tag, std::size_t n) {
    std::vector<std::pair<std::size_t, Relation>> all;
    for (std::size_t i = 0; i < kb.size(); ++i)
      for (Relation r : kRelations) all.emplace_back(i, r);
    Rng cr = root.split(tag);
    cr.shuffle(std::span(all));
    if (n > all.size()) fail(ErrorKind::Config, "more queries requested than KB cells");
    all.resize(n);
    return all;
  };

  Rng fr = root.split("fp-objects");
  std::size_t k = 0;
  for (auto [i, r] : cells("fp", sizes.ood_fp)) {
    const Triple t = kb.triple(i, r);
    const auto& pool = kb.pool(r);
    std::string wrong;
    do {
      wrong = pool[fr.below(pool.size())];
    } while (wrong == t.object || wrong == t.entity);
    q.ood_fp.push_back({"fp-" + std::to_string(k++), t.entity, fp_question(t.entity, r, wrong),
                        {r}, t.object, wrong, true});
  }
  k = 0;
  for (auto [i, r] : cells("kqa", sizes.ood_kqa)) {
    const Triple t = kb.triple(i, r);
    q.ood_kqa.push_back({"kqa-" + std::to_string(k++), t.entity, kqa_question(t.entity, r), {r},
                         t.object, {}, false});
  }
  return q;
}

namespace {

io::Json query_json(const std::string& set, const Query& q) {
  io::Json rel = io::Json::array();
  for (Relation r : q.relations) rel.push_back(std::string(relation_name(r)));
  return {{"set", set},         {"id", q.id},     {"entity", q.entity},
          {"prompt", q.prompt}, {"relations", rel}, {"gold", q.gold},
          {"premise_object", q.premise_object}, {"premise_false", q.premise_false}};
}

}  // namespace

void save_queries(const QuerySets& q, const std::filesystem::path& path) {
  io::Json header = {{"schema", "faktlab.queries/1"},
                     {"preference_entities", q.preference_entities},
                     {"heldout_entities", q.heldout_entities},
                     {"ood_subjects", "all entities"}};
  std::vector<io::Json> recs;
  for (const auto& x : q.id_bio) recs.push_back(query_json("id_bio", x));
  for (const auto& x : q.ood_open) recs.push_back(query_json("ood_open", x));
  for (const auto& x : q.ood_fp) recs.push_back(query_json("ood_fp", x));
  for (const auto& x : q.ood_kqa) recs.push_back(query_json("ood_kqa", x));
  io::write_jsonl(path, header, recs);
}

QuerySets load_queries(const std::filesystem::path& path) {
  auto jl = io::read_jsonl(path, "faktlab.queries/1");
  QuerySets q;
  q.preference_entities = jl.header.at("preference_entities").get<std::vector<std::string>>();
  q.heldout_entities = jl.header.at("heldout_entities").get<std::vector<std::string>>();
  for (const auto& r : jl.records) {
    Query x;
    x.id = r.at("id").get<std::string>();
    x.entity = r.at("entity").get<std::string>();
    x.prompt = r.at("prompt").get<std::string>();
    for (const auto& rel : r.at("relations")) x.relations.push_back(parse_relation(rel.get<std::string>()));
    x.gold = r.at("gold").get<std::string>();
    x.premise_object = r.at("premise_object").get<std::string>();
    x.premise_false = r.at("premise_false").get<bool>();
    const auto set = r.at("set").get<std::string>();
    if (set == "id_bio") q.id_bio.push_back(std::move(x));
    else if (set == "ood_open") q.ood_open.push_back(std::move(x));
    else if (set == "ood_fp") q.ood_fp.push_back(std::move(x));
    else if (set == "ood_kqa") q.ood_kqa.push_back(std::move(x));
    else fail(ErrorKind::Io, "unknown query set '" + set + "'");
  }
  return q;
}

}  // namespace faktlab::world
