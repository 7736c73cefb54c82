#include "spanrel/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "json_util.hpp"

namespace spanrel {

using detail::json;

namespace {

constexpr const char* kParamsFormat = "spanrel.params/1";

void expect(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(name + " is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
}

void expect_ffn(const FeedForwardParams& f, std::size_t in, std::size_t out,
                const std::string& name) {
  try {
    f.validate();
  } catch (const ShapeError& e) {
    throw ShapeError(name + ": " + e.what());
  }
  if (f.input_dim() != in || f.output_dim() != out) {
    throw ShapeError(name + " maps " + std::to_string(f.input_dim()) + "->" +
                     std::to_string(f.output_dim()) + ", expected " + std::to_string(in) + "->" +
                     std::to_string(out));
  }
}

void expect_attention(const AttentionParams& a, std::size_t dim, std::size_t heads,
                      const std::string& name) {
  if (a.heads != heads || a.model_dim() != dim) {
    throw ShapeError(name + " has " + std::to_string(a.heads) + " heads of width " +
                     std::to_string(a.head_dim) + ", expected model width " + std::to_string(dim));
  }
  try {
    a.validate();
  } catch (const ShapeError& e) {
    throw ShapeError(name + ": " + e.what());
  }
}

void expect_layer(const FilterRefineParams& p, std::size_t dim, std::size_t heads,
                  const std::string& name) {
  expect_ffn(p.filter, dim, 1, name + ".filter");
  expect_attention(p.refine.read, dim, heads, name + ".read");
  expect_attention(p.refine.process, dim, heads, name + ".process");
  expect_ffn(p.refine.ffn, dim, dim, name + ".ffn");
}

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-limit, limit);
  return m;
}

Vector uniform_vector(std::size_t n, double limit, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(-limit, limit);
  return v;
}

FeedForwardParams random_ffn(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng) {
  return {uniform_matrix(in, hidden, rng), uniform_vector(hidden, 0.1, rng),
          uniform_matrix(hidden, out, rng), uniform_vector(out, 0.1, rng)};
}

AttentionParams random_attention(std::size_t dim, std::size_t heads, Rng& rng) {
  AttentionParams a;
  a.heads = heads;
  a.head_dim = dim / heads;
  a.wq = uniform_matrix(dim, dim, rng);
  a.wk = uniform_matrix(dim, dim, rng);
  a.wv = uniform_matrix(dim, dim, rng);
  a.wo = uniform_matrix(dim, dim, rng);
  return a;
}

FilterRefineParams random_layer(std::size_t dim, std::size_t heads, std::size_t hidden, Rng& rng) {
  FilterRefineParams p;
  p.filter = random_ffn(dim, hidden, 1, rng);
  p.refine.read = random_attention(dim, heads, rng);
  p.refine.process = random_attention(dim, heads, rng);
  p.refine.ffn = random_ffn(dim, hidden, dim, rng);
  return p;
}

json ffn_to_json(const FeedForwardParams& f) {
  return {{"w1", detail::matrix_to_json(f.w1)},
          {"b1", f.b1},
          {"w2", detail::matrix_to_json(f.w2)},
          {"b2", f.b2}};
}

FeedForwardParams ffn_from_json(const json& v, const std::string& where) {
  using namespace detail;
  return {matrix_from_json(member(v, "w1", where), child(where, "w1")),
          as_numbers(member(v, "b1", where), child(where, "b1")),
          matrix_from_json(member(v, "w2", where), child(where, "w2")),
          as_numbers(member(v, "b2", where), child(where, "b2"))};
}

json attention_to_json(const AttentionParams& a) {
  return {{"heads", a.heads},
          {"head_dim", a.head_dim},
          {"wq", detail::matrix_to_json(a.wq)},
          {"wk", detail::matrix_to_json(a.wk)},
          {"wv", detail::matrix_to_json(a.wv)},
          {"wo", detail::matrix_to_json(a.wo)}};
}

AttentionParams attention_from_json(const json& v, const std::string& where) {
  using namespace detail;
  AttentionParams a;
  a.heads = as_index(member(v, "heads", where), child(where, "heads"));
  a.head_dim = as_index(member(v, "head_dim", where), child(where, "head_dim"));
  a.wq = matrix_from_json(member(v, "wq", where), child(where, "wq"));
  a.wk = matrix_from_json(member(v, "wk", where), child(where, "wk"));
  a.wv = matrix_from_json(member(v, "wv", where), child(where, "wv"));
  a.wo = matrix_from_json(member(v, "wo", where), child(where, "wo"));
  return a;
}

json layer_to_json(const FilterRefineParams& p) {
  return {{"filter", ffn_to_json(p.filter)},
          {"read", attention_to_json(p.refine.read)},
          {"process", attention_to_json(p.refine.process)},
          {"ffn", ffn_to_json(p.refine.ffn)}};
}

FilterRefineParams layer_from_json(const json& v, const std::string& where) {
  using namespace detail;
  FilterRefineParams p;
  p.filter = ffn_from_json(member(v, "filter", where), child(where, "filter"));
  p.refine.read = attention_from_json(member(v, "read", where), child(where, "read"));
  p.refine.process = attention_from_json(member(v, "process", where), child(where, "process"));
  p.refine.ffn = ffn_from_json(member(v, "ffn", where), child(where, "ffn"));
  return p;
}

}  // namespace

void ModelParams::validate() const {
  const std::size_t e = types.num_entity_types();
  const std::size_t r = types.num_relation_types();
  if (dim == 0 || heads == 0 || dim % heads != 0) {
    throw ShapeError("model width " + std::to_string(dim) + " must be a positive multiple of " +
                     std::to_string(heads) + " heads");
  }
  expect(w_ent, 2 * dim, dim, "w_ent");
  expect(w_rel, 2 * dim, dim, "w_rel");
  expect_ffn(entity_head, dim, e, "entity_head");
  expect_ffn(relation_head, dim, r, "relation_head");
  expect_layer(span_layer, dim, heads, "span_layer");
  expect_layer(relation_layer, dim, heads, "relation_layer");
  if (bias.num_entity_types != e || bias.num_relation_types != r) {
    throw ShapeError("bias table sized for " + std::to_string(bias.num_entity_types) + "/" +
                     std::to_string(bias.num_relation_types) + " types, inventory has " +
                     std::to_string(e) + "/" + std::to_string(r));
  }
  bias.validate();
}

ModelParams random_params(const ModelShape& shape, std::uint64_t seed) {
  if (shape.heads == 0 || shape.dim == 0 || shape.dim % shape.heads != 0) {
    throw ShapeError("model width must be a positive multiple of the head count");
  }
  const std::size_t d = shape.dim;
  const std::size_t hidden = shape.hidden ? shape.hidden : 2 * d;
  const std::size_t e = shape.types.num_entity_types();
  const std::size_t r = shape.types.num_relation_types();
  Rng rng(seed);

  ModelParams p;
  p.dim = d;
  p.heads = shape.heads;
  p.types = shape.types;
  p.w_ent = uniform_matrix(2 * d, d, rng);
  p.w_rel = uniform_matrix(2 * d, d, rng);
  p.entity_head = random_ffn(d, hidden, e, rng);
  p.relation_head = random_ffn(d, hidden, r, rng);
  p.span_layer = random_layer(d, shape.heads, hidden, rng);
  p.relation_layer = random_layer(d, shape.heads, hidden, rng);
  p.bias = BiasTable::zeros(e, r);
  for (double& v : p.bias.phi_htr) v = rng.uniform(-0.5, 0.5);
  for (Matrix* m : {&p.bias.phi_hr, &p.bias.phi_tr, &p.bias.phi_ht}) {
    for (double& v : m->data()) v = rng.uniform(-0.5, 0.5);
  }
  p.validate();
  return p;
}

namespace {

ModelParams params_from_json(const json& doc) {
  using namespace detail;
  const std::string root;
  if (!doc.is_object()) throw FormatError("", "expected a JSON object");
  if (as_string(member(doc, "format", root), "/format") != kParamsFormat) {
    throw FormatError("/format", std::string("expected '") + kParamsFormat + "'");
  }
  ModelParams p;
  p.dim = as_index(member(doc, "dim", root), "/dim");
  p.heads = as_index(member(doc, "heads", root), "/heads");
  try {
    p.types = TypeInventory::from_full_lists(
        as_strings(member(doc, "entity_types", root), "/entity_types"),
        as_strings(member(doc, "relation_types", root), "/relation_types"));
  } catch (const std::invalid_argument& e) {
    throw FormatError("/entity_types", e.what());
  }
  p.w_ent = matrix_from_json(member(doc, "w_ent", root), "/w_ent");
  p.w_rel = matrix_from_json(member(doc, "w_rel", root), "/w_rel");
  p.entity_head = ffn_from_json(member(doc, "entity_head", root), "/entity_head");
  p.relation_head = ffn_from_json(member(doc, "relation_head", root), "/relation_head");
  p.span_layer = layer_from_json(member(doc, "span_layer", root), "/span_layer");
  p.relation_layer = layer_from_json(member(doc, "relation_layer", root), "/relation_layer");

  p.bias = bias_from_json(member(doc, "bias", root), "/bias", p.types.num_entity_types(),
                          p.types.num_relation_types());

  try {
    p.validate();
  } catch (const ShapeError& e) {
    throw FormatError("", e.what());
  }
  return p;
}

}  // namespace

ModelParams load_params(const std::filesystem::path& path) {
  const json doc = detail::read_json_file(path);
  try {
    return params_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + "#" + e.where(), e.message());
  }
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
  params.validate();
  json doc;
  doc["format"] = kParamsFormat;
  doc["dim"] = params.dim;
  doc["heads"] = params.heads;
  doc["entity_types"] = params.types.entity_types();
  doc["relation_types"] = params.types.relation_types();
  doc["w_ent"] = detail::matrix_to_json(params.w_ent);
  doc["w_rel"] = detail::matrix_to_json(params.w_rel);
  doc["entity_head"] = ffn_to_json(params.entity_head);
  doc["relation_head"] = ffn_to_json(params.relation_head);
  doc["span_layer"] = layer_to_json(params.span_layer);
  doc["relation_layer"] = layer_to_json(params.relation_layer);
  doc["bias"] = detail::bias_to_json(params.bias);
  detail::write_text_file(path, doc.dump() + "\n");
}

std::size_t default_k_span(std::size_t length, std::size_t valid_spans) {
  return std::min(valid_spans, std::max<std::size_t>(8, length));
}

ForwardResult forward(const std::vector<std::string>& tokens, const ModelParams& params,
                      const ForwardConfig& config) {
  if (config.max_span_width == 0) throw std::invalid_argument("max span width must be positive");
  ForwardResult out;
  out.tokens = encode_tokens(tokens, params.dim, config.seed);
  const Matrix& h = out.tokens.vectors;

  out.spans = enumerate_spans(tokens.size(), config.max_span_width);
  MaskVector span_valid(out.spans.size());
  std::size_t n_valid = 0;
  for (std::size_t i = 0; i < out.spans.size(); ++i) {
    span_valid[i] = out.spans[i].valid;
    n_valid += out.spans[i].valid;
  }
  const Matrix s = span_representations(out.tokens, out.spans, params.w_ent);
  const std::size_t k_span =
      std::max<std::size_t>(1, config.k_span.value_or(default_k_span(tokens.size(), n_valid)));
  out.span_filter = filter_and_refine(s, h, k_span, params.span_layer, Mask(span_valid), config.depth);
  const Matrix& s_f = out.span_filter.filtered.representations;
  out.entity_logits = classify_spans(s_f, params.entity_head);

  auto rel = relation_representations(s_f, params.w_rel);
  out.pairs = std::move(rel.pairs);
  MaskVector pair_valid(out.pairs.size());
  bool any_pair = false;
  for (std::size_t i = 0; i < out.pairs.size(); ++i) {
    pair_valid[i] = out.pairs[i].valid;
    any_pair = any_pair || out.pairs[i].valid;
  }
  if (any_pair) {
    const std::size_t k_rel = std::max<std::size_t>(1, config.k_rel.value_or(k_span));
    out.relation_filter =
        filter_and_refine(rel.reprs, h, k_rel, params.relation_layer, Mask(pair_valid), config.depth);
    out.relation_logits =
        classify_relations(out.relation_filter->filtered.representations, params.relation_head);
  } else {
    out.relation_logits = Matrix(0, params.types.num_relation_types());
  }
  return out;
}

}  // namespace spanrel
