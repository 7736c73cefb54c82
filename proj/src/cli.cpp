#include "spanrel/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "json_util.hpp"
#include "spanrel/constraints.hpp"
#include "spanrel/errors.hpp"
#include "spanrel/formats.hpp"
#include "spanrel/model.hpp"
#include "spanrel/objectives.hpp"
#include "spanrel/synthetic.hpp"

namespace spanrel {

namespace {

namespace fs = std::filesystem;
using detail::json;

const fs::path kDefaultConstraints = fs::path(SPANREL_DATA_DIR) / "constraints" / "conll04.json";

// Runs f(0..n-1) on up to `jobs` threads. Results come back in index order and
// the lowest-index exception, if any, is rethrown, so the outcome does not
// depend on `jobs`.
template <typename F>
auto parallel_map(std::size_t n, std::size_t jobs, F&& f) -> std::vector<decltype(f(0))> {
  using R = decltype(f(0));
  std::vector<std::optional<R>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(n, 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<R> out;
  out.reserve(n);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    detail::write_text_file(path, text);
  }
}

ForwardConfig forward_config(const RunConfig& cfg) {
  ForwardConfig fc;
  fc.max_span_width = cfg.max_span_width;
  if (cfg.k_span > 0) fc.k_span = cfg.k_span;
  if (cfg.k_rel > 0) fc.k_rel = cfg.k_rel;
  fc.depth = cfg.depth;
  fc.seed = cfg.seed;
  return fc;
}

ConstraintSet constraints_or_default(const std::string& path, bool task_only_default) {
  if (!path.empty()) return load_constraints(path);
  return task_only_default ? ConstraintSet::task_only() : load_constraints(kDefaultConstraints);
}

std::string file_stem_for(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) c = '_';
  }
  return s.empty() ? "_" : s;
}

// --- init-params ----------------------------------------------------------

int cmd_init_params(const RunConfig& cfg, const std::string& constraints_path,
                    const std::string& out_path, std::ostream& out) {
  ModelShape shape;
  shape.dim = cfg.dim;
  shape.heads = cfg.heads;
  if (constraints_path.empty()) {
    shape.types = conll04_types();
  } else {
    const auto cs = load_constraints(constraints_path);
    shape.types = TypeInventory(cs.entity_types, cs.relation_types);
  }
  const ModelParams params = random_params(shape, cfg.seed);
  if (out_path.empty() || out_path == "-") {
    const fs::path tmp = fs::temp_directory_path() / fmt::format("spanrel-params-{}.json", cfg.seed);
    save_params(params, tmp);
    std::ifstream in(tmp);
    out << in.rdbuf();
    fs::remove(tmp);
  } else {
    save_params(params, out_path);
  }
  return kExitOk;
}

// --- score ----------------------------------------------------------------

int cmd_score(const RunConfig& cfg, const std::string& sentences_path,
              const std::string& params_path, const std::string& out_path, std::ostream& out) {
  const auto sentences = load_sentences(sentences_path);
  const ModelParams params = load_params(params_path);
  const ForwardConfig fc = forward_config(cfg);

  ScoreDocument doc;
  doc.types = params.types;
  doc.bias = params.bias;
  doc.max_span_width = cfg.max_span_width;
  doc.depth = cfg.depth;
  doc.seed = cfg.seed;
  doc.sentences = parallel_map(sentences.size(), cfg.jobs, [&](std::size_t i) {
    return scored_sentence(sentences[i].id, forward(sentences[i].tokens, params, fc), params);
  });
  emit(score_document_to_json(doc), out_path, out);
  return kExitOk;
}

// --- decode ---------------------------------------------------------------

int cmd_decode(const RunConfig& cfg, const std::string& scores_path,
               const std::string& constraints_path, const std::string& out_path,
               std::ostream& out, std::ostream& err) {
  const ScoreDocument doc = load_score_document(scores_path);
  const ConstraintSet cs =
      constraints_or_default(constraints_path, cfg.algorithm == Algorithm::kUnconstrained);
  DecodeOptions opts;
  opts.use_bias = cfg.use_bias;
  opts.budget = cfg.budget;

  StructureDocument result;
  result.algorithm = std::string(algorithm_name(cfg.algorithm));
  result.bias = cfg.use_bias && doc.bias.has_value() && cfg.algorithm != Algorithm::kUnconstrained;
  try {
    auto structures = parallel_map(doc.sentences.size(), cfg.jobs, [&](std::size_t i) {
      try {
        return decode(cfg.algorithm, doc.sentences[i].instance, cs, opts);
      } catch (const BudgetExceeded& e) {
        throw BudgetExceeded("sentence '" + doc.sentences[i].id + "': " + e.what());
      }
    });
    for (std::size_t i = 0; i < structures.size(); ++i) {
      result.structures.push_back({doc.sentences[i].id, std::move(structures[i])});
    }
  } catch (const BudgetExceeded& e) {
    err << "error: " << e.what()
        << " (raise --budget or use --algorithm entity-first)\n";
    return kExitBudget;
  }
  emit(structure_document_to_json(result, doc.types), out_path, out);
  return kExitOk;
}

// --- verify ---------------------------------------------------------------

int cmd_verify(const std::string& structures_path, const std::string& scores_path,
               const std::string& constraints_path, std::ostream& out) {
  const ScoreDocument scores = load_score_document(scores_path);
  const StructureDocument structures = load_structure_document(structures_path, scores.types);
  const ConstraintSet cs = constraints_or_default(constraints_path, false);

  std::map<std::string, const ScoredSentence*> by_id;
  for (const auto& s : scores.sentences) by_id[s.id] = &s;

  std::size_t total = 0;
  for (const auto& ns : structures.structures) {
    auto it = by_id.find(ns.id);
    if (it == by_id.end()) {
      throw FormatError(structures_path, "structure '" + ns.id + "' has no scored sentence");
    }
    std::vector<Violation> violations;
    try {
      violations = check_constraints(ns.structure, cs, it->second->instance);
    } catch (const std::out_of_range& e) {
      throw FormatError(structures_path, "structure '" + ns.id + "': " + e.what());
    }
    for (const auto& v : violations) out << ns.id << ": " << v.constraint << ": " << v.message << "\n";
    total += violations.size();
  }
  out << structures.structures.size() << " structure(s), " << total << " violation(s)\n";
  return total == 0 ? kExitOk : kExitViolations;
}

// --- bench ----------------------------------------------------------------

struct BenchOptions {
  std::size_t sentences = 100;
  std::size_t length = 20;
  bool assert_ordering = false;
  double min_ratio = 3.0;
  std::string constraints;
};

int cmd_bench(const RunConfig& cfg, const BenchOptions& bo, std::ostream& out, std::ostream& err) {
  const ConstraintSet cs = constraints_or_default(bo.constraints, false);
  SyntheticSpec spec;
  spec.length = bo.length;
  spec.max_width = cfg.max_span_width;
  spec.spans = std::max<std::size_t>(8, bo.length);
  spec.relations = spec.spans;
  spec.types = TypeInventory(cs.entity_types, cs.relation_types);
  spec.with_bias = true;
  const auto instances = synthetic_instances(spec, bo.sentences, cfg.seed);

  DecodeOptions opts;
  opts.use_bias = cfg.use_bias;
  opts.budget = cfg.budget;

  using clock = std::chrono::steady_clock;
  std::map<Algorithm, double> rate;
  out << fmt::format("{:<16}{:>10}{:>12}{:>12}\n", "algorithm", "sentences", "seconds", "sent/s");
  if (instances.empty()) return kExitOk;
  for (Algorithm a : {Algorithm::kUnconstrained, Algorithm::kEntityFirst, Algorithm::kJoint,
                      Algorithm::kRelationFirst}) {
    const auto t0 = clock::now();
    double checksum = 0.0;
    try {
      for (const auto& inst : instances) checksum += decode(a, inst, cs, opts).objective;
    } catch (const BudgetExceeded& e) {
      err << "error: " << algorithm_name(a) << ": " << e.what() << "\n";
      return kExitBudget;
    }
    const double secs =
        std::max(std::chrono::duration<double>(clock::now() - t0).count(), 1e-9);
    rate[a] = static_cast<double>(instances.size()) / secs;
    out << fmt::format("{:<16}{:>10}{:>12.4f}{:>12.1f}\n", algorithm_name(a), instances.size(), secs,
                       rate[a]);
    (void)checksum;
  }
  const double ratio = rate[Algorithm::kEntityFirst] / rate[Algorithm::kJoint];
  out << fmt::format("entity-first / joint throughput: {:.2f}x\n", ratio);
  if (bo.assert_ordering && ratio < bo.min_ratio) {
    err << fmt::format("ordering check failed: entity-first is {:.2f}x joint, need {:.2f}x\n", ratio,
                       bo.min_ratio);
    return kExitViolations;
  }
  return kExitOk;
}

// --- dump-attention -------------------------------------------------------

void write_attention_csv(const fs::path& path, const std::vector<std::size_t>& candidates,
                         const std::vector<Matrix>& heads) {
  std::string text = "candidate,head,token,weight\n";
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    for (std::size_t h = 0; h < heads.size(); ++h) {
      const auto row = heads[h].row(k);
      for (std::size_t t = 0; t < row.size(); ++t) {
        text += fmt::format("{},{},{},{}\n", candidates[k], h, t, row[t]);
      }
    }
  }
  detail::write_text_file(path, text);
}

int cmd_dump_attention(const RunConfig& cfg, const std::string& sentences_path,
                       const std::string& params_path, const std::string& out_dir,
                       std::ostream& out) {
  const auto sentences = load_sentences(sentences_path);
  const ModelParams params = load_params(params_path);
  const ForwardConfig fc = forward_config(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir)) throw std::runtime_error("cannot create directory " + out_dir);

  const auto results = parallel_map(sentences.size(), cfg.jobs, [&](std::size_t i) {
    return forward(sentences[i].tokens, params, fc);
  });
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& fwd = results[i];
    const std::string stem = file_stem_for(sentences[i].id);
    const fs::path span_file = fs::path(out_dir) / (stem + ".span.csv");
    const fs::path rel_file = fs::path(out_dir) / (stem + ".relation.csv");
    write_attention_csv(span_file, fwd.span_filter.filtered.kept_indices,
                        fwd.span_filter.read_attention);
    if (fwd.relation_filter) {
      write_attention_csv(rel_file, fwd.relation_filter->filtered.kept_indices,
                          fwd.relation_filter->read_attention);
    } else {
      write_attention_csv(rel_file, {}, {});
    }
    out << span_file.string() << "\n" << rel_file.string() << "\n";
  }
  return kExitOk;
}

// --- loss -----------------------------------------------------------------

int cmd_loss(const RunConfig& cfg, const std::string& gold_path, const std::string& params_path,
             const std::string& out_path, std::ostream& out) {
  const ModelParams params = load_params(params_path);
  const auto gold = load_gold(gold_path, params.types);
  const ForwardConfig fc = forward_config(cfg);
  const auto losses = parallel_map(gold.size(), cfg.jobs, [&](std::size_t i) {
    return total_loss(gold[i].tokens, params, gold[i].gold, fc, cfg.alpha);
  });
  json arr = json::array();
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& b = losses[i];
    arr.push_back({{"id", gold[i].id},
                   {"filter_entity", b.filter_entity},
                   {"filter_relation", b.filter_relation},
                   {"class_entity", b.class_entity},
                   {"class_relation", b.class_relation},
                   {"total", b.total}});
  }
  emit(detail::dump_json(json{{"alpha", cfg.alpha}, {"sentences", std::move(arr)}}), out_path, out);
  return kExitOk;
}

// Value of `--config` if present, else the environment default.
std::optional<std::string> config_path_from(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') {
    return std::string(env);
  }
  return std::nullopt;
}

}  // namespace

void RunConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(dim, "dim");
  positive(heads, "heads");
  positive(max_span_width, "max_span_width");
  positive(depth, "depth");
  positive(budget, "budget");
  positive(jobs, "jobs");
  if (dim % heads != 0) throw std::invalid_argument("dim must be divisible by heads");
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
}

namespace {

RunConfig run_config_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) throw FormatError("", "expected a JSON object");
  RunConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    const std::string where = "/" + key;
    if (key == "dim") cfg.dim = as_index(v, where);
    else if (key == "heads") cfg.heads = as_index(v, where);
    else if (key == "max_span_width") cfg.max_span_width = as_index(v, where);
    else if (key == "k_span") cfg.k_span = as_index(v, where);
    else if (key == "k_rel") cfg.k_rel = as_index(v, where);
    else if (key == "depth") cfg.depth = as_index(v, where);
    else if (key == "alpha") cfg.alpha = as_number(v, where);
    else if (key == "seed") cfg.seed = as_index(v, where);
    else if (key == "budget") cfg.budget = as_index(v, where);
    else if (key == "jobs") cfg.jobs = as_index(v, where);
    else if (key == "use_bias") cfg.use_bias = as_bool(v, where);
    else if (key == "algorithm") {
      auto a = parse_algorithm(as_string(v, where));
      if (!a) throw FormatError(where, "unknown algorithm");
      cfg.algorithm = *a;
    } else {
      throw FormatError(where, "unknown key");
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError("", e.what());
  }
  return cfg;
}

}  // namespace

RunConfig load_run_config(const fs::path& path) {
  const json doc = detail::read_json_file(path);
  try {
    return run_config_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + "#" + e.where(), e.message());
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    if (auto path = config_path_from(args)) cfg = load_run_config(*path);
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }

  CLI::App app{"spanrel: span-based joint entity and relation extraction with constrained decoding"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "RunConfig JSON (default: $SPANREL_CONFIG)");

  std::string algorithm_text(algorithm_name(cfg.algorithm));
  std::string sentences, params, scores, structures, constraints, gold, out_path, out_dir;
  BenchOptions bench;

  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", cfg.seed, "Random seed"); };
  auto add_jobs = [&](CLI::App* c) {
    c->add_option("--jobs,-j", cfg.jobs, "Worker threads (output order is unaffected)");
  };
  auto add_model = [&](CLI::App* c) {
    c->add_option("--max-span-width", cfg.max_span_width, "Longest span in tokens");
    c->add_option("--k-span", cfg.k_span, "Spans kept by the filter (0: default)");
    c->add_option("--k-rel", cfg.k_rel, "Relations kept by the filter (0: default)");
    c->add_option("--depth", cfg.depth, "Refine passes");
  };
  auto add_decode = [&](CLI::App* c) {
    c->add_option("--algorithm,-a", algorithm_text,
                  "unconstrained | entity-first | joint | relation-first");
    c->add_option("--budget", cfg.budget, "Search nodes per exact solve");
    c->add_flag("--no-bias{false}", cfg.use_bias, "Leave the bias table out of constrained scoring");
  };

  auto* init = app.add_subcommand("init-params", "Write randomly initialized model parameters");
  init->add_option("--out,-o", out_path, "Output file (default: stdout)");
  init->add_option("--dim", cfg.dim, "Model dimension");
  init->add_option("--heads", cfg.heads, "Attention heads");
  init->add_option("--constraints", constraints, "Constraint file supplying the type inventory");
  add_seed(init);

  auto* score = app.add_subcommand("score", "Run the model over sentences and write a score file");
  score->add_option("--sentences,-s", sentences, "Sentences JSON")->required();
  score->add_option("--params,-p", params, "Parameter file")->required();
  score->add_option("--out,-o", out_path, "Output file (default: stdout)");
  add_model(score);
  add_seed(score);
  add_jobs(score);

  auto* dec = app.add_subcommand("decode", "Decode a score file into structures");
  dec->add_option("--scores", scores, "Score file")->required();
  dec->add_option("--constraints,-c", constraints,
                  "Constraint file (default: bundled CoNLL04; none for unconstrained)");
  dec->add_option("--out,-o", out_path, "Output file (default: stdout)");
  add_decode(dec);
  add_seed(dec);
  add_jobs(dec);

  auto* ver = app.add_subcommand("verify", "Check structures against constraints");
  ver->add_option("--structures", structures, "Structure file")->required();
  ver->add_option("--scores", scores, "Score file the structures were decoded from")->required();
  ver->add_option("--constraints,-c", constraints, "Constraint file (default: bundled CoNLL04)");

  auto* bn = app.add_subcommand("bench", "Time every decoder on synthetic instances");
  bn->add_option("--sentences", bench.sentences, "Number of instances");
  bn->add_option("--length", bench.length, "Sentence length");
  bn->add_option("--constraints,-c", bench.constraints, "Constraint file (default: bundled CoNLL04)");
  bn->add_flag("--assert-ordering", bench.assert_ordering,
               "Fail unless entity-first is at least --min-ratio times faster than joint");
  bn->add_option("--min-ratio", bench.min_ratio, "Required entity-first / joint speedup");
  bn->add_option("--max-span-width", cfg.max_span_width, "Longest span in tokens");
  bn->add_option("--budget", cfg.budget, "Search nodes per exact solve");
  bn->add_flag("--no-bias{false}", cfg.use_bias, "Leave the bias table out of constrained scoring");
  add_seed(bn);

  auto* dump = app.add_subcommand("dump-attention", "Export READ attention weights as CSV");
  dump->add_option("--sentences,-s", sentences, "Sentences JSON")->required();
  dump->add_option("--params,-p", params, "Parameter file")->required();
  dump->add_option("--out-dir,-o", out_dir, "Directory for the CSV files")->required();
  add_model(dump);
  add_seed(dump);
  add_jobs(dump);

  auto* loss = app.add_subcommand("loss", "Evaluate the training objective against gold labels");
  loss->add_option("--gold,-g", gold, "Gold annotation JSON")->required();
  loss->add_option("--params,-p", params, "Parameter file")->required();
  loss->add_option("--alpha", cfg.alpha, "Ranking margin");
  loss->add_option("--out,-o", out_path, "Output file (default: stdout)");
  add_model(loss);
  add_seed(loss);
  add_jobs(loss);

  std::vector<const char*> argv{"spanrel"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    auto algo = parse_algorithm(algorithm_text);
    if (!algo) throw std::invalid_argument("unknown algorithm '" + algorithm_text + "'");
    cfg.algorithm = *algo;
    cfg.validate();

    if (*init) return cmd_init_params(cfg, constraints, out_path, out);
    if (*score) return cmd_score(cfg, sentences, params, out_path, out);
    if (*dec) return cmd_decode(cfg, scores, constraints, out_path, out, err);
    if (*ver) return cmd_verify(structures, scores, constraints, out);
    if (*bn) return cmd_bench(cfg, bench, out, err);
    if (*dump) return cmd_dump_attention(cfg, sentences, params, out_dir, out);
    if (*loss) return cmd_loss(cfg, gold, params, out_path, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace spanrel
