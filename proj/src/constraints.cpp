#include "spanrel/constraints.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "json_util.hpp"

namespace spanrel {

using detail::json;

std::size_t ConstraintSet::triple_count() const {
  std::size_t n = 0;
  for (const auto& row : allowed) n += row.relations.size();
  return n;
}

ConstraintSet ConstraintSet::task_only() {
  ConstraintSet c;
  c.name = "task-only";
  c.closed_world = false;
  return c;
}

namespace {

ConstraintSet from_json(const json& doc, const std::string& source) {
  using namespace detail;
  const std::string root;
  if (!doc.is_object()) throw FormatError(source, "constraint file must be a JSON object");
  ConstraintSet c;
  if (doc.contains("name")) c.name = as_string(doc["name"], "/name");
  c.entity_types = as_strings(member(doc, "entity_types", root), "/entity_types");
  c.relation_types = as_strings(member(doc, "relation_types", root), "/relation_types");
  c.closed_world = as_bool(member(doc, "closed_world", root), "/closed_world");
  if (doc.contains("non_overlap")) c.non_overlap = as_bool(doc["non_overlap"], "/non_overlap");
  if (doc.contains("consistency")) c.consistency = as_bool(doc["consistency"], "/consistency");

  const std::set<std::string> ents(c.entity_types.begin(), c.entity_types.end());
  const std::set<std::string> rels(c.relation_types.begin(), c.relation_types.end());
  if (ents.size() != c.entity_types.size()) throw FormatError("/entity_types", "duplicate type");
  if (rels.size() != c.relation_types.size()) throw FormatError("/relation_types", "duplicate type");
  if (ents.count(kNonEntity)) throw FormatError("/entity_types", "null label is implicit");
  if (rels.count(kNoRelation)) throw FormatError("/relation_types", "null label is implicit");

  const json& rows = array_at(doc, "allowed", root);
  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string where = child("/allowed", i);
    AllowedRow row;
    row.head = as_string(member(rows[i], "head", where), child(where, "head"));
    row.tail = as_string(member(rows[i], "tail", where), child(where, "tail"));
    row.relations = as_strings(member(rows[i], "relations", where), child(where, "relations"));
    if (!ents.count(row.head)) {
      throw FormatError(child(where, "head"), "unknown entity type '" + row.head + "'");
    }
    if (!ents.count(row.tail)) {
      throw FormatError(child(where, "tail"), "unknown entity type '" + row.tail + "'");
    }
    if (!seen_pairs.insert({row.head, row.tail}).second) {
      throw FormatError(where, "duplicate row for (" + row.head + ", " + row.tail + ")");
    }
    std::set<std::string> seen_rel;
    for (std::size_t j = 0; j < row.relations.size(); ++j) {
      const auto& r = row.relations[j];
      const std::string rw = child(child(where, "relations"), j);
      if (!rels.count(r)) throw FormatError(rw, "unknown relation type '" + r + "'");
      if (!seen_rel.insert(r).second) throw FormatError(rw, "duplicate relation '" + r + "'");
    }
    c.allowed.push_back(std::move(row));
  }
  return c;
}

}  // namespace

ConstraintSet parse_constraints(const std::string& json_text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(source, std::string("invalid JSON: ") + e.what());
  }
  return from_json(doc, source);
}

ConstraintSet load_constraints(const std::filesystem::path& path) {
  const json doc = detail::read_json_file(path);
  try {
    return from_json(doc, path.string());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + "#" + e.where(), e.message());
  }
}

std::string constraints_to_json(const ConstraintSet& c) {
  json doc;
  doc["name"] = c.name;
  doc["entity_types"] = c.entity_types;
  doc["relation_types"] = c.relation_types;
  doc["closed_world"] = c.closed_world;
  doc["non_overlap"] = c.non_overlap;
  doc["consistency"] = c.consistency;
  doc["allowed"] = json::array();
  for (const auto& row : c.allowed) {
    doc["allowed"].push_back({{"head", row.head}, {"tail", row.tail}, {"relations", row.relations}});
  }
  return detail::dump_json(doc);
}

BoundConstraints::BoundConstraints(const ConstraintSet& c, const TypeInventory& types)
    : e_(types.num_entity_types()),
      r_(types.num_relation_types()),
      non_overlap_(c.non_overlap),
      consistency_(c.consistency),
      table_(e_ * e_ * r_, c.closed_world ? 0 : 1) {
  for (const auto& row : c.allowed) {
    const auto h = types.entity_index(row.head);
    const auto t = types.entity_index(row.tail);
    if (!h || !t) {
      throw std::invalid_argument("constraint '" + c.name + "' names entity type '" +
                                  (h ? row.tail : row.head) + "' missing from the inventory");
    }
    // Listed pairs admit exactly their relations, whatever the world assumption.
    for (std::size_t r = 1; r < r_; ++r) table_[(*h * e_ + *t) * r_ + r] = 0;
    for (const auto& name : row.relations) {
      const auto r = types.relation_index(name);
      if (!r) {
        throw std::invalid_argument("constraint '" + c.name + "' names relation type '" + name +
                                    "' missing from the inventory");
      }
      table_[(*h * e_ + *t) * r_ + *r] = 1;
    }
  }
}

}  // namespace spanrel
