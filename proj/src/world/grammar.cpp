#include "faktlab/world/grammar.hpp"

#include <set>
#include <unordered_set>

#include "faktlab/error.hpp"
#include "faktlab/tinylm/vocab.hpp"

namespace faktlab::world {

namespace {

constexpr std::array<std::string_view, kNumRelations> kNames = {
    "born_year", "born_city", "occupation", "award", "field", "team", "spouse", "died_year"};
constexpr std::array<std::string_view, kNumRelations> kTopics = {
    "birth_year", "birthplace", "occupation", "awards", "field", "team", "spouse", "death"};

struct Pattern {
  Relation relation;
  std::string_view text;
};

constexpr Pattern kPatterns[] = {
    {Relation::BornYear, "{E} was born in the year {O} ."},
    {Relation::BornYear, "{E} 's birth year is {O} ."},
    {Relation::BornYear, "In {O} , {E} was born ."},
    {Relation::BornYear, "{E} came into the world in {O} ."},
    {Relation::BornCity, "{E} was born in the city of {O} ."},
    {Relation::BornCity, "{E} 's birthplace is {O} ."},
    {Relation::BornCity, "{E} was a native of {O} ."},
    {Relation::BornCity, "The hometown of {E} is {O} ."},
    {Relation::Occupation, "{E} worked as a {O} ."},
    {Relation::Occupation, "{E} 's occupation was {O} ."},
    {Relation::Occupation, "By profession , {E} was a {O} ."},
    {Relation::Occupation, "{E} earned a living as a {O} ."},
    {Relation::Award, "{E} won the {O} ."},
    {Relation::Award, "{E} received the {O} ."},
    {Relation::Award, "The {O} was awarded to {E} ."},
    {Relation::Award, "{E} was honored with the {O} ."},
    {Relation::Field, "{E} specialized in {O} ."},
    {Relation::Field, "{E} 's field was {O} ."},
    {Relation::Field, "{E} made contributions to {O} ."},
    {Relation::Field, "{E} studied {O} ."},
    {Relation::Team, "{E} played for the {O} ."},
    {Relation::Team, "{E} was a member of the {O} ."},
    {Relation::Team, "{E} 's team was the {O} ."},
    {Relation::Team, "The {O} signed {E} ."},
    {Relation::Spouse, "{E} was married to {O} ."},
    {Relation::Spouse, "{E} 's spouse was {O} ."},
    {Relation::Spouse, "{E} wed {O} ."},
    {Relation::Spouse, "The spouse of {E} was {O} ."},
    {Relation::DiedYear, "{E} died in {O} ."},
    {Relation::DiedYear, "{E} passed away in the year {O} ."},
    {Relation::DiedYear, "{E} 's death came in {O} ."},
    {Relation::DiedYear, "In {O} , {E} died ."},
};

constexpr std::array<std::string_view, kNumRelations> kKqa = {
    "What year was {E} born ?",         "Where was {E} born ?",
    "What was the occupation of {E} ?", "Which award did {E} win ?",
    "What field did {E} work in ?",     "Which team did {E} play for ?",
    "Who was {E} married to ?",         "What year did {E} die ?"};

constexpr std::array<std::string_view, kNumRelations> kFp = {
    "Why was {E} born in {O} ?",           "Why was {E} born in the city of {O} ?",
    "Why did {E} become a {O} ?",          "Why did {E} win the {O} ?",
    "Why did {E} specialize in {O} ?",     "Why did {E} play for the {O} ?",
    "Why did {E} marry {O} ?",             "Why did {E} die in {O} ?"};

constexpr std::string_view kBio = "Write a short biography of {E} .";
constexpr std::string_view kOpen = "Explain {E} , including information about {A} and {B} .";
constexpr std::string_view kProbeHead = "True or false :";
constexpr std::string_view kProbeTail = "Answer :";

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  for (auto w : tinylm::split_words(text)) out.emplace_back(w);
  return out;
}

std::string fill(std::string_view pattern, std::string_view key, std::string_view value) {
  std::string s(pattern);
  auto at = s.find(key);
  if (at == std::string::npos) fail(ErrorKind::InvalidArgument, "pattern lacks slot");
  s.replace(at, key.size(), value);
  return s;
}

struct Tables {
  std::vector<Template> all;
  std::array<std::vector<const Template*>, kNumRelations> by_relation;
  std::unordered_set<std::string> literals;

  Tables() {
    all.reserve(std::size(kPatterns));
    for (const auto& p : kPatterns) all.push_back({p.relation, words_of(p.text)});
    for (const auto& t : all) {
      by_relation[static_cast<std::size_t>(t.relation)].push_back(&t);
      for (const auto& w : t.words)
        if (w != "{E}" && w != "{O}") literals.insert(w);
    }
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

bool slot_ok(std::string_view w) {
  if (w.empty() || w == "." || w == "?" || w == ",") return false;
  if (w == tinylm::Vocab::kTrue || w == tinylm::Vocab::kFalse ||
      w == tinylm::Vocab::kPremiseFalse || w == tinylm::Vocab::kEos ||
      w == tinylm::Vocab::kBos || w == tinylm::Vocab::kPad)
    return false;
  return !is_template_word(w);
}

}  // namespace

std::string_view relation_name(Relation r) { return kNames[static_cast<std::size_t>(r)]; }
std::string_view relation_topic(Relation r) { return kTopics[static_cast<std::size_t>(r)]; }

Relation parse_relation(std::string_view name) {
  for (Relation r : kRelations)
    if (relation_name(r) == name) return r;
  fail(ErrorKind::InvalidArgument, "unknown relation '" + std::string(name) + "'");
}

const std::vector<Template>& templates() { return tables().all; }

std::vector<const Template*> templates_for(Relation r) {
  return tables().by_relation[static_cast<std::size_t>(r)];
}

bool is_template_word(std::string_view word) {
  return tables().literals.count(std::string(word)) > 0;
}

std::vector<std::string> verbalize(const Triple& t, std::size_t variant) {
  const auto& ts = tables().by_relation[static_cast<std::size_t>(t.relation)];
  if (variant >= ts.size()) fail(ErrorKind::InvalidArgument, "template variant out of range");
  std::vector<std::string> out = ts[variant]->words;
  for (auto& w : out) {
    if (w == "{E}") w = t.entity;
    else if (w == "{O}") w = t.object;
  }
  return out;
}

std::string verbalize_text(const Triple& t, std::size_t variant) {
  std::string s;
  for (const auto& w : verbalize(t, variant)) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

std::string canonical_sentence(const Triple& t) { return verbalize_text(t, 0); }

std::optional<Triple> parse_sentence(std::span<const std::string_view> words) {
  std::optional<Triple> found;
  for (const auto& t : tables().all) {
    if (t.words.size() != words.size()) continue;
    Triple tr;
    tr.relation = t.relation;
    bool ok = true;
    for (std::size_t i = 0; i < words.size() && ok; ++i) {
      const auto& w = t.words[i];
      if (w == "{E}") {
        ok = slot_ok(words[i]);
        tr.entity = words[i];
      } else if (w == "{O}") {
        ok = slot_ok(words[i]);
        tr.object = words[i];
      } else {
        ok = w == words[i];
      }
    }
    if (!ok) continue;
    if (found) fail(ErrorKind::State, "ambiguous sentence grammar");
    found = std::move(tr);
  }
  return found;
}

std::optional<Triple> parse_sentence(std::string_view text) {
  auto w = tinylm::split_words(text);
  return parse_sentence(std::span<const std::string_view>(w));
}

std::string bio_prompt(std::string_view entity) { return fill(kBio, "{E}", entity); }

std::string open_prompt(std::string_view entity, Relation a, Relation b) {
  return fill(fill(fill(kOpen, "{E}", entity), "{A}", relation_topic(a)), "{B}",
              relation_topic(b));
}

std::string kqa_question(std::string_view entity, Relation r) {
  return fill(kKqa[static_cast<std::size_t>(r)], "{E}", entity);
}

std::string kqa_answer(std::string_view object) { return std::string(object) + " ."; }

std::string fp_question(std::string_view entity, Relation r, std::string_view object) {
  return fill(fill(kFp[static_cast<std::size_t>(r)], "{E}", entity), "{O}", object);
}

std::string fp_rejection(const Triple& truth) {
  return std::string(tinylm::Vocab::kPremiseFalse) + " " + canonical_sentence(truth);
}

std::string probe_prompt(std::string_view sentence) {
  return std::string(kProbeHead) + " " + std::string(sentence) + " " + std::string(kProbeTail);
}

std::vector<std::string> grammar_words() {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add_text = [&](std::string_view text) {
    for (auto w : tinylm::split_words(text)) {
      if (w.front() == '{') continue;
      std::string s(w);
      if (seen.insert(s).second) out.push_back(s);
    }
  };
  for (const auto& p : kPatterns) add_text(p.text);
  add_text(kBio);
  add_text(kOpen);
  for (auto t : kTopics) add_text(t);
  for (auto q : kKqa) add_text(q);
  for (auto q : kFp) add_text(q);
  add_text(kProbeHead);
  add_text(kProbeTail);
  return out;
}

}  // namespace faktlab::world
