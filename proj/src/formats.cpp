#include "spanrel/formats.hpp"

#include <set>
#include <stdexcept>
#include <string>

#include "json_util.hpp"

namespace spanrel {

using detail::json;

namespace {

json parse_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(source, std::string("invalid JSON: ") + e.what());
  }
}

// Prefixes the JSON pointer of a FormatError with the file it came from.
template <typename F>
auto with_source(const std::string& source, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const FormatError& e) {
    if (source.empty()) throw;
    throw FormatError(source + "#" + e.where(), e.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void check_format_tag(const json& doc, const char* expected) {
  using namespace detail;
  if (!doc.is_object()) throw FormatError("", "expected a JSON object");
  if (as_string(member(doc, "format", ""), "/format") != expected) {
    throw FormatError("/format", std::string("expected '") + expected + "'");
  }
}

std::string sentence_id(const json& s, std::size_t i, const std::string& where) {
  if (!s.contains("id")) return "s" + std::to_string(i);
  return detail::as_string(s["id"], detail::child(where, "id"));
}

void check_unique_ids(const std::vector<std::string>& ids, const std::string& where) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) {
      throw FormatError(detail::child(detail::child(where, i), "id"),
                        "duplicate sentence id '" + ids[i] + "'");
    }
  }
}

std::size_t entity_type_index(const json& v, const TypeInventory& types, const std::string& where) {
  const std::string name = detail::as_string(v, where);
  auto idx = types.entity_index(name);
  if (!idx) throw FormatError(where, "unknown entity type '" + name + "'");
  return *idx;
}

std::size_t relation_type_index(const json& v, const TypeInventory& types,
                                const std::string& where) {
  const std::string name = detail::as_string(v, where);
  auto idx = types.relation_index(name);
  if (!idx) throw FormatError(where, "unknown relation type '" + name + "'");
  return *idx;
}

}  // namespace

std::vector<Sentence> parse_sentences(const std::string& json_text, const std::string& source) {
  return with_source(source, [&] {
    using namespace detail;
    const json doc = parse_text(json_text, "");
    const json& arr = array_at(doc, "sentences", "");
    if (arr.empty()) throw FormatError("/sentences", "no sentences");
    std::vector<Sentence> out;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string where = child("/sentences", i);
      Sentence s;
      s.id = sentence_id(arr[i], i, where);
      s.tokens = as_strings(member(arr[i], "tokens", where), child(where, "tokens"));
      if (s.tokens.empty()) throw FormatError(child(where, "tokens"), "empty sentence");
      ids.push_back(s.id);
      out.push_back(std::move(s));
    }
    check_unique_ids(ids, "/sentences");
    return out;
  });
}

std::vector<Sentence> load_sentences(const std::filesystem::path& path) {
  return parse_sentences(read_file(path), path.string());
}

ScoredSentence scored_sentence(const std::string& id, const ForwardResult& fwd,
                               const ModelParams& params) {
  ScoredSentence out;
  out.id = id;
  ScoredInstance& inst = out.instance;
  inst.length = fwd.tokens.length();
  inst.tokens = fwd.tokens.tokens;
  inst.types = params.types;
  inst.bias = params.bias;

  const auto& span_filter = fwd.span_filter.filtered;
  for (std::size_t i = 0; i < span_filter.kept_indices.size(); ++i) {
    const std::size_t slot = span_filter.kept_indices[i];
    const auto row = fwd.entity_logits.row(i);
    inst.spans.push_back({fwd.spans[slot].start, fwd.spans[slot].end, Vector(row.begin(), row.end())});
    out.span_candidates.push_back(slot);
    out.span_rank_scores.push_back(span_filter.ranking_scores[slot]);
  }
  if (fwd.relation_filter) {
    const std::size_t k = fwd.k_span();
    const auto& rel_filter = fwd.relation_filter->filtered;
    for (std::size_t i = 0; i < rel_filter.kept_indices.size(); ++i) {
      const std::size_t flat = rel_filter.kept_indices[i];
      const auto [h, t] = pair_from_index(flat, k);
      const auto row = fwd.relation_logits.row(i);
      inst.relations.push_back({h, t, Vector(row.begin(), row.end())});
      out.relation_candidates.push_back(flat);
      out.relation_rank_scores.push_back(rel_filter.ranking_scores[flat]);
    }
  }
  return out;
}

std::string score_document_to_json(const ScoreDocument& doc) {
  json out;
  out["format"] = kScoresFormat;
  out["entity_types"] = doc.types.entity_types();
  out["relation_types"] = doc.types.relation_types();
  if (doc.bias) out["bias"] = detail::bias_to_json(*doc.bias);
  out["config"] = {{"max_span_width", doc.max_span_width}, {"depth", doc.depth}, {"seed", doc.seed}};
  json sentences = json::array();
  for (const auto& s : doc.sentences) {
    json js;
    js["id"] = s.id;
    if (!s.instance.tokens.empty()) js["tokens"] = s.instance.tokens;
    js["length"] = s.instance.length;
    json spans = json::array();
    for (std::size_t i = 0; i < s.instance.spans.size(); ++i) {
      const auto& sp = s.instance.spans[i];
      json j = {{"start", sp.start}, {"end", sp.end}, {"logits", sp.logits}};
      if (i < s.span_candidates.size()) j["candidate"] = s.span_candidates[i];
      if (i < s.span_rank_scores.size()) j["rank_score"] = s.span_rank_scores[i];
      spans.push_back(std::move(j));
    }
    js["spans"] = std::move(spans);
    json rels = json::array();
    for (std::size_t i = 0; i < s.instance.relations.size(); ++i) {
      const auto& r = s.instance.relations[i];
      json j = {{"head", r.head}, {"tail", r.tail}, {"logits", r.logits}};
      if (i < s.relation_candidates.size()) j["candidate"] = s.relation_candidates[i];
      if (i < s.relation_rank_scores.size()) j["rank_score"] = s.relation_rank_scores[i];
      rels.push_back(std::move(j));
    }
    js["relations"] = std::move(rels);
    sentences.push_back(std::move(js));
  }
  out["sentences"] = std::move(sentences);
  return detail::dump_json(out);
}

ScoreDocument parse_score_document(const std::string& json_text, const std::string& source) {
  return with_source(source, [&] {
    using namespace detail;
    const json doc = parse_text(json_text, "");
    check_format_tag(doc, kScoresFormat);
    ScoreDocument out;
    try {
      out.types = TypeInventory::from_full_lists(
          as_strings(member(doc, "entity_types", ""), "/entity_types"),
          as_strings(member(doc, "relation_types", ""), "/relation_types"));
    } catch (const std::invalid_argument& e) {
      throw FormatError("/entity_types", e.what());
    }
    const std::size_t e = out.types.num_entity_types();
    const std::size_t r = out.types.num_relation_types();
    if (doc.contains("bias")) {
      out.bias = bias_from_json(doc["bias"], "/bias", e, r);
      try {
        out.bias->validate();
      } catch (const std::exception& ex) {
        throw FormatError("/bias", ex.what());
      }
    }
    if (doc.contains("config")) {
      const json& c = doc["config"];
      if (c.contains("max_span_width")) {
        out.max_span_width = as_index(c["max_span_width"], "/config/max_span_width");
      }
      if (c.contains("depth")) out.depth = as_index(c["depth"], "/config/depth");
      if (c.contains("seed")) out.seed = as_index(c["seed"], "/config/seed");
    }

    const json& arr = array_at(doc, "sentences", "");
    std::vector<std::string> ids;
    for (std::size_t si = 0; si < arr.size(); ++si) {
      const std::string where = child("/sentences", si);
      const json& js = arr[si];
      ScoredSentence s;
      s.id = sentence_id(js, si, where);
      ScoredInstance& inst = s.instance;
      inst.types = out.types;
      inst.bias = out.bias;
      if (js.contains("tokens")) inst.tokens = as_strings(js["tokens"], child(where, "tokens"));
      if (js.contains("length")) {
        inst.length = as_index(js["length"], child(where, "length"));
        if (!inst.tokens.empty() && inst.tokens.size() != inst.length) {
          throw FormatError(child(where, "length"), "does not match the token count");
        }
      } else if (!inst.tokens.empty()) {
        inst.length = inst.tokens.size();
      } else {
        throw FormatError(where, "needs 'tokens' or 'length'");
      }
      if (inst.length == 0) throw FormatError(child(where, "length"), "must be positive");

      const json& spans = array_at(js, "spans", where);
      for (std::size_t i = 0; i < spans.size(); ++i) {
        const std::string w = child(child(where, "spans"), i);
        ScoredSpan sp;
        sp.start = as_index(member(spans[i], "start", w), child(w, "start"));
        sp.end = as_index(member(spans[i], "end", w), child(w, "end"));
        if (sp.start > sp.end || sp.end >= inst.length) {
          throw FormatError(w, "span [" + std::to_string(sp.start) + ", " +
                                   std::to_string(sp.end) + "] lies outside the sentence");
        }
        sp.logits = as_numbers(member(spans[i], "logits", w), child(w, "logits"));
        if (sp.logits.size() != e) {
          throw FormatError(child(w, "logits"), "expected " + std::to_string(e) + " logits");
        }
        if (spans[i].contains("candidate")) {
          s.span_candidates.push_back(as_index(spans[i]["candidate"], child(w, "candidate")));
        }
        if (spans[i].contains("rank_score")) {
          s.span_rank_scores.push_back(as_number(spans[i]["rank_score"], child(w, "rank_score")));
        }
        inst.spans.push_back(std::move(sp));
      }
      const json& rels = array_at(js, "relations", where);
      for (std::size_t i = 0; i < rels.size(); ++i) {
        const std::string w = child(child(where, "relations"), i);
        ScoredRelation rel;
        rel.head = as_index(member(rels[i], "head", w), child(w, "head"));
        rel.tail = as_index(member(rels[i], "tail", w), child(w, "tail"));
        if (rel.head >= inst.spans.size()) throw FormatError(child(w, "head"), "no such span");
        if (rel.tail >= inst.spans.size()) throw FormatError(child(w, "tail"), "no such span");
        if (rel.head == rel.tail) throw FormatError(w, "head and tail are the same span");
        rel.logits = as_numbers(member(rels[i], "logits", w), child(w, "logits"));
        if (rel.logits.size() != r) {
          throw FormatError(child(w, "logits"), "expected " + std::to_string(r) + " logits");
        }
        if (rels[i].contains("candidate")) {
          s.relation_candidates.push_back(as_index(rels[i]["candidate"], child(w, "candidate")));
        }
        if (rels[i].contains("rank_score")) {
          s.relation_rank_scores.push_back(as_number(rels[i]["rank_score"], child(w, "rank_score")));
        }
        inst.relations.push_back(std::move(rel));
      }
      ids.push_back(s.id);
      out.sentences.push_back(std::move(s));
    }
    check_unique_ids(ids, "/sentences");
    return out;
  });
}

ScoreDocument load_score_document(const std::filesystem::path& path) {
  return parse_score_document(read_file(path), path.string());
}

std::string structure_document_to_json(const StructureDocument& doc, const TypeInventory& types) {
  json out;
  out["format"] = kStructuresFormat;
  out["algorithm"] = doc.algorithm;
  out["bias"] = doc.bias;
  json arr = json::array();
  for (const auto& ns : doc.structures) {
    json ents = json::array();
    for (const auto& e : ns.structure.entities) {
      ents.push_back({{"span", e.span},
                      {"start", e.start},
                      {"end", e.end},
                      {"type", types.entity_name(e.type)},
                      {"score", e.score}});
    }
    json rels = json::array();
    for (const auto& r : ns.structure.relations) {
      rels.push_back({{"relation", r.relation},
                      {"head", r.head},
                      {"tail", r.tail},
                      {"type", types.relation_name(r.type)},
                      {"score", r.score}});
    }
    arr.push_back({{"id", ns.id},
                   {"objective", ns.structure.objective},
                   {"entities", std::move(ents)},
                   {"relations", std::move(rels)}});
  }
  out["structures"] = std::move(arr);
  return detail::dump_json(out);
}

StructureDocument parse_structure_document(const std::string& json_text, const TypeInventory& types,
                                           const std::string& source) {
  return with_source(source, [&] {
    using namespace detail;
    const json doc = parse_text(json_text, "");
    check_format_tag(doc, kStructuresFormat);
    StructureDocument out;
    out.algorithm = as_string(member(doc, "algorithm", ""), "/algorithm");
    if (doc.contains("bias")) out.bias = as_bool(doc["bias"], "/bias");
    const json& arr = array_at(doc, "structures", "");
    std::vector<std::string> ids;
    for (std::size_t si = 0; si < arr.size(); ++si) {
      const std::string where = child("/structures", si);
      NamedStructure ns;
      ns.id = sentence_id(arr[si], si, where);
      if (arr[si].contains("objective")) {
        ns.structure.objective = as_number(arr[si]["objective"], child(where, "objective"));
      }
      const json& ents = array_at(arr[si], "entities", where);
      for (std::size_t i = 0; i < ents.size(); ++i) {
        const std::string w = child(child(where, "entities"), i);
        DecodedEntity e;
        e.span = as_index(member(ents[i], "span", w), child(w, "span"));
        e.start = as_index(member(ents[i], "start", w), child(w, "start"));
        e.end = as_index(member(ents[i], "end", w), child(w, "end"));
        e.type = entity_type_index(member(ents[i], "type", w), types, child(w, "type"));
        if (ents[i].contains("score")) e.score = as_number(ents[i]["score"], child(w, "score"));
        ns.structure.entities.push_back(e);
      }
      const json& rels = array_at(arr[si], "relations", where);
      for (std::size_t i = 0; i < rels.size(); ++i) {
        const std::string w = child(child(where, "relations"), i);
        DecodedRelation r;
        r.relation = as_index(member(rels[i], "relation", w), child(w, "relation"));
        r.head = as_index(member(rels[i], "head", w), child(w, "head"));
        r.tail = as_index(member(rels[i], "tail", w), child(w, "tail"));
        r.type = relation_type_index(member(rels[i], "type", w), types, child(w, "type"));
        if (rels[i].contains("score")) r.score = as_number(rels[i]["score"], child(w, "score"));
        ns.structure.relations.push_back(r);
      }
      ids.push_back(ns.id);
      out.structures.push_back(std::move(ns));
    }
    check_unique_ids(ids, "/structures");
    return out;
  });
}

StructureDocument load_structure_document(const std::filesystem::path& path,
                                          const TypeInventory& types) {
  return parse_structure_document(read_file(path), types, path.string());
}

std::vector<GoldSentence> load_gold(const std::filesystem::path& path, const TypeInventory& types) {
  const std::string text = read_file(path);
  return with_source(path.string(), [&] {
    using namespace detail;
    const json doc = parse_text(text, "");
    const json& arr = array_at(doc, "sentences", "");
    std::vector<GoldSentence> out;
    std::vector<std::string> ids;
    auto boundary = [](const json& v, const std::string& w) {
      if (!v.is_array() || v.size() != 2) throw FormatError(w, "expected [start, end]");
      return std::pair(as_index(v[0], child(w, 0)), as_index(v[1], child(w, 1)));
    };
    for (std::size_t si = 0; si < arr.size(); ++si) {
      const std::string where = child("/sentences", si);
      GoldSentence g;
      g.id = sentence_id(arr[si], si, where);
      g.tokens = as_strings(member(arr[si], "tokens", where), child(where, "tokens"));
      if (g.tokens.empty()) throw FormatError(child(where, "tokens"), "empty sentence");
      auto check_bounds = [&](std::size_t s, std::size_t e, const std::string& w) {
        if (s > e || e >= g.tokens.size()) throw FormatError(w, "boundary outside the sentence");
      };
      if (arr[si].contains("entities")) {
        const json& ents = array_at(arr[si], "entities", where);
        for (std::size_t i = 0; i < ents.size(); ++i) {
          const std::string w = child(child(where, "entities"), i);
          GoldEntity e;
          e.start = as_index(member(ents[i], "start", w), child(w, "start"));
          e.end = as_index(member(ents[i], "end", w), child(w, "end"));
          check_bounds(e.start, e.end, w);
          e.type = entity_type_index(member(ents[i], "type", w), types, child(w, "type"));
          g.gold.entities.push_back(e);
        }
      }
      if (arr[si].contains("relations")) {
        const json& rels = array_at(arr[si], "relations", where);
        for (std::size_t i = 0; i < rels.size(); ++i) {
          const std::string w = child(child(where, "relations"), i);
          GoldRelation r;
          std::tie(r.head_start, r.head_end) = boundary(member(rels[i], "head", w), child(w, "head"));
          std::tie(r.tail_start, r.tail_end) = boundary(member(rels[i], "tail", w), child(w, "tail"));
          check_bounds(r.head_start, r.head_end, child(w, "head"));
          check_bounds(r.tail_start, r.tail_end, child(w, "tail"));
          r.type = relation_type_index(member(rels[i], "type", w), types, child(w, "type"));
          g.gold.relations.push_back(r);
        }
      }
      ids.push_back(g.id);
      out.push_back(std::move(g));
    }
    check_unique_ids(ids, "/sentences");
    return out;
  });
}

}  // namespace spanrel
