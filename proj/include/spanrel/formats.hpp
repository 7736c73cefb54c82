#pragma once

// JSON documents exchanged by the command-line tool. Loaders throw FormatError
// with a JSON-pointer location; writers emit two-space indented JSON with a
// trailing newline so identical content is byte-identical.
//
//   sentences   {"sentences": [{"id", "tokens"}]}
//   scores      "spanrel.scores/1"      scored candidates per sentence
//   structures  "spanrel.structures/1"  decoded entities and relations
//   gold        {"sentences": [{"id", "tokens", "entities", "relations"}]}

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spanrel/decode.hpp"
#include "spanrel/model.hpp"
#include "spanrel/objectives.hpp"
#include "spanrel/repr.hpp"

namespace spanrel {

inline constexpr const char* kScoresFormat = "spanrel.scores/1";
inline constexpr const char* kStructuresFormat = "spanrel.structures/1";

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
};

std::vector<Sentence> parse_sentences(const std::string& json_text, const std::string& source = "");
std::vector<Sentence> load_sentences(const std::filesystem::path& path);

// One sentence of a score file. `instance.spans[i]` is the kept span whose
// enumeration slot is `span_candidates[i]`; likewise for relations, whose
// candidate index is the flat head*K+tail pair index.
struct ScoredSentence {
  std::string id;
  ScoredInstance instance;
  std::vector<std::size_t> span_candidates;
  Vector span_rank_scores;
  std::vector<std::size_t> relation_candidates;
  Vector relation_rank_scores;
};

struct ScoreDocument {
  TypeInventory types;
  std::optional<BiasTable> bias;
  std::size_t max_span_width = 12;
  std::size_t depth = 1;
  std::uint64_t seed = 0;
  std::vector<ScoredSentence> sentences;  // every instance shares types and bias
};

// Packages a forward pass as a decodable instance.
ScoredSentence scored_sentence(const std::string& id, const ForwardResult& fwd,
                               const ModelParams& params);

std::string score_document_to_json(const ScoreDocument& doc);
// Candidate indices and rank scores are optional on input so score files can
// be written by hand; `length` may stand in for `tokens`.
ScoreDocument parse_score_document(const std::string& json_text, const std::string& source = "");
ScoreDocument load_score_document(const std::filesystem::path& path);

struct NamedStructure {
  std::string id;
  DecodedStructure structure;
};

struct StructureDocument {
  std::string algorithm;
  bool bias = false;  // whether objectives include the bias table
  std::vector<NamedStructure> structures;
};

// Type indices are written as names from `types`.
std::string structure_document_to_json(const StructureDocument& doc, const TypeInventory& types);
// Names are resolved against `types`; span and relation references are only
// range-checked later, against a score file.
StructureDocument parse_structure_document(const std::string& json_text, const TypeInventory& types,
                                           const std::string& source = "");
StructureDocument load_structure_document(const std::filesystem::path& path,
                                          const TypeInventory& types);

struct GoldSentence {
  std::string id;
  std::vector<std::string> tokens;
  GoldAnnotation gold;
};

// Entities are {"start", "end", "type"}; relations are
// {"head": [start, end], "tail": [start, end], "type"}.
std::vector<GoldSentence> load_gold(const std::filesystem::path& path, const TypeInventory& types);

}  // namespace spanrel
