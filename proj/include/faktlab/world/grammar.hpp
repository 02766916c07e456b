#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace faktlab::world {

enum class Relation { BornYear, BornCity, Occupation, Award, Field, Team, Spouse, DiedYear };

inline constexpr std::size_t kNumRelations = 8;
inline constexpr std::array<Relation, kNumRelations> kRelations = {
    Relation::BornYear, Relation::BornCity, Relation::Occupation, Relation::Award,
    Relation::Field,    Relation::Team,     Relation::Spouse,     Relation::DiedYear};

/// Schema name, e.g. "born_year".
std::string_view relation_name(Relation r);
Relation parse_relation(std::string_view name);
/// Word used for the relation inside open-ended prompts, e.g. "birthplace".
std::string_view relation_topic(Relation r);

struct Triple {
  std::string entity;
  Relation relation = Relation::BornYear;
  std::string object;

  auto operator<=>(const Triple&) const = default;
  bool operator==(const Triple&) const = default;
};

/// One sentence pattern: literal words plus exactly one {E} and one {O} slot.
struct Template {
  Relation relation;
  std::vector<std::string> words;
};

const std::vector<Template>& templates();
std::vector<const Template*> templates_for(Relation r);
/// True for any literal word that occurs in a sentence template.
bool is_template_word(std::string_view word);

/// Words of the sentence produced by the given template (index into
/// templates_for(t.relation)).
std::vector<std::string> verbalize(const Triple& t, std::size_t variant);
std::string verbalize_text(const Triple& t, std::size_t variant);
/// The first template of the relation.
std::string canonical_sentence(const Triple& t);

/// Parses a complete sentence (words including the final "."). Returns the
/// unique triple it verbalizes, or nothing if no template matches.
std::optional<Triple> parse_sentence(std::span<const std::string_view> words);
std::optional<Triple> parse_sentence(std::string_view text);

// Prompt and answer shapes of the task families.
std::string bio_prompt(std::string_view entity);
std::string open_prompt(std::string_view entity, Relation a, Relation b);
std::string kqa_question(std::string_view entity, Relation r);
std::string kqa_answer(std::string_view object);
std::string fp_question(std::string_view entity, Relation r, std::string_view object);
/// Premise-rejection answer: the marker followed by the correcting sentence.
std::string fp_rejection(const Triple& truth);
std::string probe_prompt(std::string_view sentence);

/// Every fixed word used by templates, prompts and answers, in a stable order.
std::vector<std::string> grammar_words();

}  // namespace faktlab::world
