#include "relclass/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <optional>
#include <set>
#include <thread>

#include <json.hpp>

#include "relclass/combiner.hpp"
#include "relclass/distsup.hpp"

namespace relclass {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- RunConfig

namespace {

std::string normalize_key(std::string_view key) {
  std::string out(trim(key));
  std::replace(out.begin(), out.end(), '-', '_');
  return out;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  auto k = normalize_key(key);
  if (k.empty()) throw Error("empty config key");
  values_[k] = std::string(trim(value));
}

void RunConfig::merge_text(std::string_view text, std::string_view source) {
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, reader.line_number(), "expected 'key = value'");
    }
    if (trim(t.substr(0, eq)).empty()) {
      throw ParseError(source, reader.line_number(), "empty config key");
    }
    set(t.substr(0, eq), t.substr(eq + 1));
  }
}

void RunConfig::load_file(const fs::path& path) {
  merge_text(read_file(path), path.string());
}

bool RunConfig::has(std::string_view key) const {
  return values_.count(normalize_key(key)) > 0;
}

std::string RunConfig::get(std::string_view key, std::string_view fallback) const {
  auto it = values_.find(normalize_key(key));
  return it == values_.end() ? std::string(fallback) : it->second;
}

double RunConfig::get_double(std::string_view key, double fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_double(get(key));
  } catch (const Error& e) {
    throw Error("config key '" + std::string(key) + "': " + e.what());
  }
}

long long RunConfig::get_int(std::string_view key, long long fallback) const {
  if (!has(key)) return fallback;
  try {
    return parse_int(get(key));
  } catch (const Error& e) {
    throw Error("config key '" + std::string(key) + "': " + e.what());
  }
}

bool RunConfig::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  auto v = lowercase(get(key));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("config key '" + std::string(key) + "': expected a boolean, got '" + v + "'");
}

std::vector<double> RunConfig::get_doubles(std::string_view key,
                                           std::vector<double> fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (auto part : split(get(key), ',')) {
    if (trim(part).empty()) continue;
    try {
      out.push_back(parse_double(trim(part)));
    } catch (const Error& e) {
      throw Error("config key '" + std::string(key) + "': " + e.what());
    }
  }
  return out;
}

std::uint64_t RunConfig::seed() const {
  const long long s = get_int("seed", 0);
  if (s < 0) throw Error("seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

// ---------------------------------------------------------------- models

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::pat: return "pat";
    case ModelKind::svm_bow: return "svm-bow";
    case ModelKind::svm_skip: return "svm-skip";
    case ModelKind::cnn_context: return "cnn-context";
    case ModelKind::cnn_piece: return "cnn-piece";
    case ModelKind::cnn_piece_ext: return "cnn-piece-ext";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view text) {
  for (ModelKind k : {ModelKind::pat, ModelKind::svm_bow, ModelKind::svm_skip,
                      ModelKind::cnn_context, ModelKind::cnn_piece, ModelKind::cnn_piece_ext}) {
    if (text == to_string(k)) return k;
  }
  throw Error("unknown model '" + std::string(text) +
              "' (expected pat, svm-bow, svm-skip, cnn-context, cnn-piece, cnn-piece-ext)");
}

namespace {

bool is_svm(ModelKind kind) { return kind == ModelKind::svm_bow || kind == ModelKind::svm_skip; }
bool is_cnn(ModelKind kind) {
  return kind == ModelKind::cnn_context || kind == ModelKind::cnn_piece ||
         kind == ModelKind::cnn_piece_ext;
}

FeatureKind feature_kind_of(ModelKind kind) {
  return kind == ModelKind::svm_skip ? FeatureKind::skip : FeatureKind::bow;
}

}  // namespace

double SvmSlotModel::score(const RelationInstance& instance) const {
  return svm_score(model, space.vectorize(feature_bag(instance, model.feature_kind), weighting))
      .value();
}

double CnnSlotModel::score(const RelationInstance& instance) const {
  return forward(model, instance).value();
}

double PatternSlotModel::score(const RelationInstance& instance) const {
  return classify_pattern(patterns, instance, options).value();
}

void SlotLog::add(std::string_view stage, std::string_view step, double value) {
  text += slot + "\t" + std::string(stage) + "\t" + std::string(step) + "\t" +
          format_double(value) + "\n";
}

SvmConfig svm_config_from(const RunConfig& config, std::uint64_t seed) {
  SvmConfig c;
  c.C = config.get_double("C", c.C);
  c.tolerance = config.get_double("svm_tolerance", c.tolerance);
  c.max_epochs = static_cast<int>(config.get_int("svm_max_epochs", c.max_epochs));
  c.seed = seed;
  c.validate();
  return c;
}

CnnConfig cnn_config_from(const RunConfig& config, ModelKind kind, std::uint64_t seed) {
  CnnConfig c;
  switch (kind) {
    case ModelKind::cnn_context: c.variant = CnnVariant::contextwise; break;
    case ModelKind::cnn_piece: c.variant = CnnVariant::piecewise; break;
    case ModelKind::cnn_piece_ext: c.variant = CnnVariant::piecewise_ext; break;
    default: throw Error("not a CNN model: " + std::string(to_string(kind)));
  }
  auto size = [&](std::string_view key, std::size_t fallback) {
    const long long v = config.get_int(key, static_cast<long long>(fallback));
    if (v < 0) throw Error("config key '" + std::string(key) + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.n_filters = size("filters", c.n_filters);
  c.width = size("width", c.width);
  c.k = size("k", c.k);
  c.hidden = size("hidden", c.hidden);
  c.dim = size("dim", c.dim);
  c.batch_size = size("batch_size", c.batch_size);
  c.learning_rate = config.get_double("learning_rate", c.learning_rate);
  c.epochs = static_cast<int>(config.get_int("epochs", c.epochs));
  c.finetune_embeddings = config.get_bool("finetune", c.finetune_embeddings);
  if (config.has("activation")) c.activation = parse_activation(config.get("activation"));
  c.seed = seed;
  return c;
}

namespace {

MatchOptions match_options_from(const RunConfig& config) {
  MatchOptions o;
  const long long gap = config.get_int("gap", static_cast<long long>(o.max_gap));
  if (gap < 0) throw Error("config key 'gap' must be non-negative");
  o.max_gap = static_cast<std::size_t>(gap);
  o.whole_sentence = config.get_bool("whole_sentence", o.whole_sentence);
  return o;
}

PatternSet load_slot_patterns(const RunConfig& config, std::string_view slot) {
  if (!config.has("patterns")) throw Error("model pat needs a pattern file (--patterns)");
  auto all = load_patterns(config.get("patterns"));
  PatternSet out;
  for (const auto& p : all.for_slot(slot)) out.add(p);
  return out;
}

std::unique_ptr<SvmSlotModel> fit_svm(std::string_view slot,
                                      std::span<const RelationInstance> train,
                                      std::span<const RelationInstance> dev, FeatureKind kind,
                                      const RunConfig& config, std::uint64_t seed,
                                      SlotLog& log) {
  if (train.empty()) throw Error("no training instances");
  auto out = std::make_unique<SvmSlotModel>();
  out->weighting = parse_weighting(config.get("weighting", "l2-counts"));
  for (const auto& inst : train) out->space.fit(feature_bag(inst, kind));
  out->space.freeze();

  auto dataset = [&](std::span<const RelationInstance> insts) {
    SvmDataset d;
    d.dim = out->space.size();
    for (const auto& inst : insts) {
      d.add(out->space.vectorize(feature_bag(inst, kind), out->weighting), inst.positive);
    }
    return d;
  };
  const SvmDataset tr = dataset(train);
  SvmConfig cfg = svm_config_from(config, seed);
  if (!config.has("C") && !dev.empty()) {
    const auto grid = config.get_doubles("c_grid", kDefaultCGrid);
    const auto tuned = tune_C(tr, dataset(dev), grid, cfg);
    for (const auto& [c, f1] : tuned.log) log.add("svm.tune", "C=" + format_double(c), f1);
    cfg.C = tuned.C;
  }
  auto result = train_svm(tr, cfg, slot, kind);
  for (std::size_t e = 0; e < result.dual_objective.size(); ++e) {
    log.add("svm.dual_objective", std::to_string(e + 1), result.dual_objective[e]);
  }
  log.add("svm.primal_objective", "final", result.primal_objective);
  log.add("svm.C", "final", cfg.C);
  for (auto& w : result.warnings) log.warnings.push_back(std::string(slot) + ": " + w);
  out->model = std::move(result.model);
  return out;
}

std::unique_ptr<CnnSlotModel> fit_cnn(std::string_view slot,
                                      std::span<const RelationInstance> train, ModelKind kind,
                                      const RunConfig& config, std::uint64_t seed,
                                      SlotLog& log) {
  if (train.empty()) throw Error("no training instances");
  CnnConfig cfg = cnn_config_from(config, kind, derive_seed(seed, "cnn"));
  auto vocab = Vocabulary::build(train);
  EmbeddingTable emb;
  const auto emb_seed = derive_seed(seed, "embeddings");
  if (config.has("embeddings")) {
    const fs::path path = config.get("embeddings");
    emb = load_embeddings(read_file(path), vocab, emb_seed, path.string());
    cfg.dim = emb.dim();
  } else {
    emb = random_embeddings(vocab, cfg.dim, emb_seed);
  }
  CnnTrainLog tl;
  auto out = std::make_unique<CnnSlotModel>();
  out->model = train_cnn(train, cfg, vocab, emb, &tl);
  out->model.slot = std::string(slot);
  for (std::size_t e = 0; e < tl.epoch_loss.size(); ++e) {
    log.add("cnn.loss", std::to_string(e + 1), tl.epoch_loss[e]);
  }
  return out;
}

}  // namespace

std::unique_ptr<SlotScorer> fit_slot(ModelKind kind, std::string_view slot,
                                     std::span<const RelationInstance> train,
                                     std::span<const RelationInstance> dev,
                                     const RunConfig& config, std::uint64_t seed,
                                     SlotLog& log) {
  if (log.slot.empty()) log.slot = std::string(slot);
  if (is_svm(kind)) return fit_svm(slot, train, dev, feature_kind_of(kind), config, seed, log);
  if (is_cnn(kind)) return fit_cnn(slot, train, kind, config, seed, log);
  auto out = std::make_unique<PatternSlotModel>();
  out->patterns = load_slot_patterns(config, slot);
  out->options = match_options_from(config);
  if (out->patterns.empty()) log.warnings.push_back(std::string(slot) + ": no patterns");
  log.add("pat.patterns", "count", static_cast<double>(out->patterns.size()));
  return out;
}

namespace {

std::map<std::string, std::vector<RelationInstance>> group_by_slot(
    std::span<const RelationInstance> instances) {
  std::map<std::string, std::vector<RelationInstance>> out;
  for (const auto& inst : instances) out[inst.slot].push_back(inst);
  return out;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index storage so the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

std::size_t thread_count(const RunConfig& config) {
  const long long t = config.get_int("threads", 1);
  return t < 1 ? 1 : static_cast<std::size_t>(t);
}

}  // namespace

Predictor train_predictor(ModelKind kind, std::span<const RelationInstance> train,
                          const RunConfig& config, std::uint64_t seed) {
  auto groups = group_by_slot(train);
  auto models = std::make_shared<std::map<std::string, std::shared_ptr<SlotScorer>>>();
  for (const auto& [slot, insts] : groups) {
    SlotLog log;
    (*models)[slot] = fit_slot(kind, slot, insts, {}, config, derive_seed(seed, slot), log);
  }
  return [models](const RelationInstance& inst) {
    auto it = models->find(inst.slot);
    return it == models->end() ? 0.0 : it->second->score(inst);
  };
}

std::string slot_file_stem(std::string_view slot) {
  std::string out;
  for (char c : slot) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
  return out;
}

std::vector<std::map<std::string, std::string>> parse_grid(std::string_view text,
                                                           std::string_view source) {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(source, reader.line_number(), "expected 'key = v1, v2, ...'");
    }
    auto key = normalize_key(t.substr(0, eq));
    if (key.empty()) throw ParseError(source, reader.line_number(), "empty grid key");
    for (const auto& [k, _] : axes) {
      if (k == key) throw ParseError(source, reader.line_number(), "duplicate grid key " + key);
    }
    std::vector<std::string> values;
    for (auto v : split(t.substr(eq + 1), ',')) {
      if (!trim(v).empty()) values.emplace_back(trim(v));
    }
    if (values.empty()) throw ParseError(source, reader.line_number(), "no values for " + key);
    axes.emplace_back(std::move(key), std::move(values));
  }
  if (axes.empty()) throw Error(std::string(source) + ": empty grid");

  std::vector<std::map<std::string, std::string>> points(1);
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        auto q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

// ---------------------------------------------------------------- commands

namespace {

// Output directory that remembers what it wrote, for the manifest.
class OutDir {
 public:
  explicit OutDir(fs::path root) : root_(std::move(root)) {}

  void write(const std::string& name, std::string_view content) {
    write_file(root_ / name, content);
    files_.insert(name);
  }
  const fs::path& root() const { return root_; }
  const std::set<std::string>& files() const { return files_; }

 private:
  fs::path root_;
  std::set<std::string> files_;
};

struct Run {
  std::string command;
  RunConfig config;
  OutDir out;
  RunReport report;
  nlohmann::json details = nlohmann::json::object();

  Run(std::string cmd, const RunConfig& cfg, const fs::path& dir)
      : command(std::move(cmd)), config(cfg), out(dir) {
    config.set("command", command);
  }

  void error(std::string message) {
    report.ok = false;
    report.errors.push_back(std::move(message));
  }
  void warn(std::string message) { report.warnings.push_back(std::move(message)); }

  // Writes run_config.txt and manifest.json; never throws.
  RunReport finish() {
    try {
      out.write("run_config.txt", config.serialize());
      nlohmann::json m;
      m["command"] = command;
      m["status"] = report.ok ? "ok" : "failed";
      m["errors"] = report.errors;
      m["warnings"] = report.warnings;
      m["details"] = details;
      std::vector<std::string> files(out.files().begin(), out.files().end());
      files.push_back("manifest.json");
      std::sort(files.begin(), files.end());
      m["outputs"] = files;
      write_file(out.root() / "manifest.json", m.dump(2) + "\n");
    } catch (const std::exception& e) {
      report.ok = false;
      report.errors.push_back(std::string("cannot write run record: ") + e.what());
    }
    return report;
  }
};

template <typename Body>
RunReport execute(std::string command, const RunConfig& config, const fs::path& out,
                  Body&& body) {
  Run run(std::move(command), config, out);
  try {
    body(run);
  } catch (const std::exception& e) {
    run.error(e.what());
  }
  return run.finish();
}

std::optional<std::vector<RelationInstance>> load_split(const fs::path& data, Split split) {
  const auto path = data / (std::string(to_string(split)) + ".tsv");
  if (!fs::exists(path)) return std::nullopt;
  return load_instances(path);
}

std::vector<RelationInstance> load_all_splits(const fs::path& data) {
  std::vector<RelationInstance> all;
  bool any = false;
  for (Split s : {Split::train, Split::dev, Split::eval}) {
    if (auto part = load_split(data, s)) {
      any = true;
      all.insert(all.end(), part->begin(), part->end());
    }
  }
  if (!any) throw Error("no train.tsv, dev.tsv, or eval.tsv in " + data.string());
  return all;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct ReportColumn {
  std::string name;  // e.g. "svm-skip.dev"
  EvalReport report;
};

// Per-slot F1 table with a macro-average row; detail file carries counts.
void write_metrics(OutDir& out, const std::vector<ReportColumn>& columns,
                   const std::string& prefix = "metrics") {
  std::set<std::string> slots;
  for (const auto& c : columns) {
    for (const auto& [slot, _] : c.report.per_slot) slots.insert(slot);
  }
  std::string table = "# F1 per slot; the average row is the macro F1 (unweighted mean over slots)\n";
  table += "slot";
  for (const auto& c : columns) table += "\t" + c.name;
  table += "\n";
  for (const auto& slot : slots) {
    table += slot;
    for (const auto& c : columns) {
      auto it = c.report.per_slot.find(slot);
      table += "\t" + (it == c.report.per_slot.end() ? std::string("-")
                                                      : format_metric(it->second.f1()));
    }
    table += "\n";
  }
  table += "average";
  for (const auto& c : columns) table += "\t" + format_metric(c.report.macro_f1);
  table += "\n";
  out.write(prefix + ".tsv", table);

  std::string detail = "column\tslot\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  for (const auto& c : columns) {
    for (const auto& [slot, m] : c.report.per_slot) {
      detail += c.name + "\t" + slot + "\t" + std::to_string(m.tp) + "\t" +
                std::to_string(m.fp) + "\t" + std::to_string(m.fn) + "\t" +
                format_double(m.precision()) + "\t" + format_double(m.recall()) + "\t" +
                format_double(m.f1()) + "\n";
    }
  }
  out.write(prefix + "_detail.tsv", detail);
}

}  // namespace

RunReport run_gen_data(const RunConfig& config, const fs::path& kb_path,
                       const fs::path& templates_path, const fs::path& out) {
  return execute("gen-data", config, out, [&](Run& run) {
    run.config.set("kb", kb_path.string());
    run.config.set("templates", templates_path.string());
    const auto kb = parse_kb(read_file(kb_path), kb_path.string());
    GeneratorConfig gen;
    gen.templates = parse_templates(read_file(templates_path), templates_path.string());
    auto count = [&](std::string_view key, std::size_t fallback) {
      const long long v = config.get_int(key, static_cast<long long>(fallback));
      if (v < 0) throw Error("config key '" + std::string(key) + "' must be non-negative");
      return static_cast<std::size_t>(v);
    };
    gen.train_positives = count("train_positives", gen.train_positives);
    gen.dev_positives = count("dev_positives", gen.dev_positives);
    gen.eval_positives = count("eval_positives", gen.eval_positives);
    gen.neg_ratio = config.get_double("neg_ratio", gen.neg_ratio);
    gen.noise_rate = config.get_double("noise_rate", gen.noise_rate);
    gen.dev_era.news = config.get_double("news_share_dev", gen.dev_era.news);
    gen.dev_era.web = 1.0 - gen.dev_era.news;
    gen.eval_era.news = config.get_double("news_share_eval", gen.eval_era.news);
    gen.eval_era.web = 1.0 - gen.eval_era.news;
    gen.seed = config.seed();

    auto corpus = generate_corpus(kb, gen);
    const bool merge = config.get_bool("merge_locations", true);
    if (merge) corpus.instances = merge_location_slots(corpus.instances);

    struct Counts {
      std::size_t pos = 0, neg = 0, news = 0, web = 0, noisy = 0;
    };
    std::map<std::pair<Split, std::string>, Counts> stats;
    std::vector<RelationInstance> by_split[3];
    for (std::size_t i = 0; i < corpus.instances.size(); ++i) {
      const auto& inst = corpus.instances[i];
      auto& c = stats[{inst.split, inst.slot}];
      (inst.positive ? c.pos : c.neg)++;
      (genre_group(inst.genre) == Genre::news ? c.news : c.web)++;
      if (corpus.noisy[i]) ++c.noisy;
      by_split[static_cast<int>(inst.split)].push_back(inst);
    }
    for (Split s : {Split::train, Split::dev, Split::eval}) {
      run.out.write(std::string(to_string(s)) + ".tsv",
                    serialize_instances(by_split[static_cast<int>(s)]));
    }
    std::string st = "split\tslot\tpositives\tnegatives\tnews\tweb\tnoisy_positives\n";
    for (const auto& [key, c] : stats) {
      st += std::string(to_string(key.first)) + "\t" + key.second + "\t" +
            std::to_string(c.pos) + "\t" + std::to_string(c.neg) + "\t" +
            std::to_string(c.news) + "\t" + std::to_string(c.web) + "\t" +
            std::to_string(c.noisy) + "\n";
    }
    run.out.write("stats.tsv", st);

    PatternSet triggers;
    const auto raw = trigger_patterns(gen.templates);
    for (const auto& slot : raw.slots()) {
      for (auto p : raw.for_slot(slot)) {
        if (merge) p.slot = merge_location_slot(p.slot);
        triggers.add(std::move(p));
      }
    }
    run.out.write("patterns.txt", triggers.serialize());
    run.details["instances"] = corpus.instances.size();
  });
}

namespace {

void write_slot_model(OutDir& out, ModelKind kind, const std::string& slot,
                      const SlotScorer& scorer) {
  const auto stem = slot_file_stem(slot);
  if (is_svm(kind)) {
    const auto& m = dynamic_cast<const SvmSlotModel&>(scorer);
    out.write(stem + ".svm", serialize_svm(m.model));
    out.write(stem + ".features.tsv", m.space.dump());
  } else if (is_cnn(kind)) {
    const auto& m = dynamic_cast<const CnnSlotModel&>(scorer);
    out.write(stem + ".cnn", serialize_cnn(m.model));
    out.write(stem + ".vocab", m.model.vocab.serialize());
  } else {
    const auto& m = dynamic_cast<const PatternSlotModel&>(scorer);
    out.write(stem + ".pat", m.patterns.serialize());
  }
}

std::string model_file_name(ModelKind kind, const std::string& slot) {
  const auto stem = slot_file_stem(slot);
  if (is_svm(kind)) return stem + ".svm";
  if (is_cnn(kind)) return stem + ".cnn";
  return stem + ".pat";
}

struct ModelIndex {
  ModelKind kind = ModelKind::pat;
  Weighting weighting = Weighting::l2_counts;
  MatchOptions match;
  std::map<std::string, std::string> files;  // slot -> file
};

ModelIndex parse_model_index(std::string_view text, std::string_view source) {
  ModelIndex idx;
  bool have_kind = false;
  LineReader reader(text);
  std::string_view line;
  while (reader.next(line)) {
    if (trim(line).empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    try {
      if (f[0] == "model" && f.size() == 2) {
        idx.kind = parse_model_kind(f[1]);
        have_kind = true;
      } else if (f[0] == "weighting" && f.size() == 2) {
        idx.weighting = parse_weighting(f[1]);
      } else if (f[0] == "gap" && f.size() == 2) {
        idx.match.max_gap = static_cast<std::size_t>(parse_int(f[1]));
      } else if (f[0] == "whole_sentence" && f.size() == 2) {
        idx.match.whole_sentence = f[1] == "1";
      } else if (f[0] == "slot" && f.size() == 3) {
        idx.files[std::string(f[1])] = std::string(f[2]);
      } else {
        throw Error("unrecognized entry '" + std::string(f[0]) + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, reader.line_number(), e.what());
    }
  }
  if (!have_kind) throw ParseError(source, 1, "missing 'model' entry");
  return idx;
}

std::unique_ptr<SlotScorer> load_slot_model(const ModelIndex& idx, const fs::path& dir,
                                            const std::string& file) {
  const auto path = dir / file;
  const auto text = read_file(path);
  if (is_svm(idx.kind)) {
    auto m = std::make_unique<SvmSlotModel>();
    m->model = parse_svm(text, path.string());
    const auto stem = path.stem().string();
    const auto fpath = dir / (stem + ".features.tsv");
    m->space = FeatureSpace::parse_dump(read_file(fpath), fpath.string());
    m->space.freeze();
    if (m->space.size() != m->model.weights.size()) {
      throw Error(fpath.string() + ": feature count does not match " + path.string());
    }
    m->weighting = idx.weighting;
    return m;
  }
  if (is_cnn(idx.kind)) {
    auto m = std::make_unique<CnnSlotModel>();
    const auto vpath = dir / (path.stem().string() + ".vocab");
    const auto vocab = Vocabulary::parse(read_file(vpath), vpath.string());
    m->model = parse_cnn(text, vocab, path.string());
    return m;
  }
  auto m = std::make_unique<PatternSlotModel>();
  m->patterns = parse_patterns(text, path.string());
  m->options = idx.match;
  return m;
}

}  // namespace

RunReport run_train(const RunConfig& config, std::string_view model, const fs::path& data,
                    const fs::path& out) {
  return execute("train", config, out, [&](Run& run) {
    const ModelKind kind = parse_model_kind(model);
    run.config.set("model", model);
    run.config.set("data", data.string());
    const auto seed = config.seed();

    std::vector<RelationInstance> train, dev;
    if (auto t = load_split(data, Split::train)) {
      train = std::move(*t);
    } else if (kind != ModelKind::pat) {
      throw Error("missing training data: " + (data / "train.tsv").string());
    }
    if (auto d = load_split(data, Split::dev)) dev = std::move(*d);
    auto train_groups = group_by_slot(train);
    auto dev_groups = group_by_slot(dev);

    std::vector<std::string> slots;
    if (kind == ModelKind::pat) {
      if (!config.has("patterns")) throw Error("model pat needs a pattern file (--patterns)");
      const auto all = load_patterns(config.get("patterns"));
      std::set<std::string> s;
      for (const auto& slot : all.slots()) s.insert(slot);
      for (const auto& [slot, _] : train_groups) {
        if (!s.count(slot)) run.warn(slot + ": no patterns for this slot");
        s.insert(slot);
      }
      slots.assign(s.begin(), s.end());
      run.details["patterns"] = all.size();
    } else {
      for (const auto& [slot, _] : train_groups) slots.push_back(slot);
    }
    if (slots.empty()) throw Error("no slots to train");

    std::vector<std::unique_ptr<SlotScorer>> models(slots.size());
    std::vector<SlotLog> logs(slots.size());
    std::vector<std::string> failures(slots.size());
    parallel_for(slots.size(), thread_count(config), [&](std::size_t i) {
      const auto& slot = slots[i];
      logs[i].slot = slot;
      try {
        static const std::vector<RelationInstance> kNone;
        auto tr = train_groups.find(slot);
        auto dv = dev_groups.find(slot);
        models[i] = fit_slot(kind, slot, tr == train_groups.end() ? kNone : tr->second,
                             dv == dev_groups.end() ? kNone : dv->second, config,
                             derive_seed(seed, slot), logs[i]);
      } catch (const std::exception& e) {
        failures[i] = e.what();
      }
    });

    std::string index = "# relclass model set\nmodel\t" + std::string(to_string(kind)) + "\n";
    if (is_svm(kind)) index += "weighting\t" + config.get("weighting", "l2-counts") + "\n";
    if (kind == ModelKind::pat) {
      const auto opts = match_options_from(config);
      index += "gap\t" + std::to_string(opts.max_gap) + "\n";
      index += "whole_sentence\t" + std::string(opts.whole_sentence ? "1" : "0") + "\n";
    }
    std::string log_text = "slot\tstage\tstep\tvalue\n";
    nlohmann::json slot_status = nlohmann::json::object();
    for (std::size_t i = 0; i < slots.size(); ++i) {
      log_text += logs[i].text;
      for (auto& w : logs[i].warnings) run.warn(w);
      if (!models[i]) {
        run.error(slots[i] + ": training failed: " + failures[i]);
        slot_status[slots[i]] = "failed: " + failures[i];
        continue;
      }
      write_slot_model(run.out, kind, slots[i], *models[i]);
      index += "slot\t" + slots[i] + "\t" + model_file_name(kind, slots[i]) + "\n";
      slot_status[slots[i]] = "ok";
    }
    run.out.write("models.tsv", index);
    run.out.write("train.log", log_text);
    run.details["slots"] = slot_status;
  });
}

RunReport run_eval(const RunConfig& config, const fs::path& models, const fs::path& data,
                   const fs::path& out) {
  return execute("eval", config, out, [&](Run& run) {
    run.config.set("models", models.string());
    run.config.set("data", data.string());
    const double threshold = config.get_double("threshold", 0.5);
    const auto index_path = models / "models.tsv";
    const auto idx = parse_model_index(read_file(index_path), index_path.string());
    const std::string name(to_string(idx.kind));

    std::map<std::string, std::unique_ptr<SlotScorer>> scorers;
    for (const auto& [slot, file] : idx.files) scorers[slot] = load_slot_model(idx, models, file);

    std::vector<ReportColumn> columns;
    std::set<std::string> missing;
    bool any = false;
    for (Split split : {Split::dev, Split::eval}) {
      auto insts = load_split(data, split);
      if (!insts) continue;
      any = true;
      ScoreTable table;
      table.models = {name};
      std::vector<RelationInstance> scored;
      std::vector<double> scores;
      for (const auto& inst : *insts) {
        auto it = scorers.find(inst.slot);
        if (it == scorers.end()) {
          missing.insert(inst.slot);
          continue;
        }
        const double s = ModelScore(it->second->score(inst)).value();
        scored.push_back(inst);
        scores.push_back(s);
        table.rows.push_back({inst.slot, inst.positive, {s}});
      }
      run.out.write("scores." + std::string(to_string(split)) + ".tsv",
                    serialize_score_table(table));
      columns.push_back({name + "." + std::string(to_string(split)),
                         evaluate(scored, scores, threshold)});
      run.details["rows"][std::string(to_string(split))] = table.rows.size();
    }
    if (!any) throw Error("no dev.tsv or eval.tsv in " + data.string());
    for (const auto& slot : missing) run.warn(slot + ": no model for this slot; skipped");
    write_metrics(run.out, columns);
  });
}

namespace {

// Per-slot metrics of one score column, or of a weighted combination.
EvalReport report_from_table(const ScoreTable& table,
                             const std::map<std::string, CombinationWeights>* weights,
                             std::size_t column, double threshold) {
  EvalReport r;
  for (const auto& row : table.rows) {
    double s;
    if (weights) {
      s = combine(row.scores, weights->at(row.slot)).value();
    } else {
      s = row.scores.at(column);
    }
    r.per_slot[row.slot].add(s >= threshold, row.gold);
  }
  r.macro_f1 = macro_average(r.per_slot);
  return r;
}

}  // namespace

RunReport run_combine(const RunConfig& config, std::span<const fs::path> score_dirs,
                      const fs::path& out) {
  return execute("combine", config, out, [&](Run& run) {
    std::vector<std::string> dirs;
    for (const auto& d : score_dirs) dirs.push_back(d.string());
    run.config.set("scores", join(dirs, ","));
    if (score_dirs.size() < 2) throw Error("combine needs at least two score directories");
    const double threshold = config.get_double("threshold", 0.5);
    const double step = config.get_double("step", 0.1);

    auto load = [&](std::string_view split) -> std::optional<ScoreTable> {
      std::vector<ScoreTable> tables;
      for (const auto& d : score_dirs) {
        const auto path = d / ("scores." + std::string(split) + ".tsv");
        if (!fs::exists(path)) return std::nullopt;
        tables.push_back(load_score_table(path));
      }
      try {
        return ScoreTable::merge(tables);
      } catch (const Error& e) {
        throw Error(std::string(split) + " scores: " + e.what());
      }
    };
    auto dev = load("dev");
    if (!dev) throw Error("every score directory needs scores.dev.tsv");
    auto eval = load("eval");

    // Disambiguate repeated model names so each column keeps its own weight.
    std::map<std::string, int> seen;
    for (auto& m : dev->models) {
      if (++seen[m] > 1) m += "#" + std::to_string(seen[m]);
    }
    if (eval) eval->models = dev->models;

    std::map<std::string, CombinationWeights> weights;
    std::string wtext = "slot";
    for (const auto& m : dev->models) wtext += "\t" + m;
    wtext += "\tdev_f1\n";
    for (const auto& slot : dev->slots()) {
      auto result = grid_search(dev->for_slot(slot), step, threshold);
      wtext += slot;
      for (double a : result.weights.alpha) wtext += "\t" + format_double(a);
      wtext += "\t" + format_double(result.dev_f1) + "\n";
      weights[slot] = std::move(result.weights);
    }
    run.out.write("weights.tsv", wtext);

    std::string htext = "model\tweight\tslots\n";
    for (const auto& [model, bins] : weight_histogram(dev->models, weights)) {
      for (const auto& [w, n] : bins) {
        htext += model + "\t" + format_double(w) + "\t" + std::to_string(n) + "\n";
      }
    }
    run.out.write("histogram.tsv", htext);

    std::vector<ReportColumn> columns;
    auto add_split = [&](const ScoreTable& table, std::string_view split) {
      for (std::size_t m = 0; m < table.models.size(); ++m) {
        columns.push_back({table.models[m] + "." + std::string(split),
                           report_from_table(table, nullptr, m, threshold)});
      }
    };
    add_split(*dev, "dev");
    if (eval) {
      for (const auto& slot : eval->slots()) {
        if (!weights.count(slot)) throw Error("slot " + slot + " has eval scores but no dev scores");
      }
      add_split(*eval, "eval");
    }
    columns.push_back({"cmb.dev", report_from_table(*dev, &weights, 0, threshold)});
    if (eval) columns.push_back({"cmb.eval", report_from_table(*eval, &weights, 0, threshold)});
    write_metrics(run.out, columns);

    auto combined = [&](const ScoreTable& table) {
      ScoreTable t;
      t.models = {"cmb"};
      for (const auto& row : table.rows) {
        t.rows.push_back({row.slot, row.gold, {combine(row.scores, weights.at(row.slot)).value()}});
      }
      return serialize_score_table(t);
    };
    run.out.write("scores.dev.tsv", combined(*dev));
    if (eval) run.out.write("scores.eval.tsv", combined(*eval));
    run.details["lattice_size"] = simplex_lattice(dev->models.size(), step).size();
  });
}

RunReport run_tune(const RunConfig& config, std::string_view model, const fs::path& data,
                   const fs::path& grid, const fs::path& out) {
  return execute("tune", config, out, [&](Run& run) {
    const ModelKind kind = parse_model_kind(model);
    run.config.set("model", model);
    run.config.set("data", data.string());
    run.config.set("grid", grid.string());
    const auto points = parse_grid(read_file(grid), grid.string());
    const double threshold = config.get_double("threshold", 0.5);
    auto train = load_split(data, Split::train);
    auto dev = load_split(data, Split::dev);
    if (!train) throw Error("missing training data: " + (data / "train.tsv").string());
    if (!dev) throw Error("missing dev data: " + (data / "dev.tsv").string());
    auto train_groups = group_by_slot(*train);
    auto dev_groups = group_by_slot(*dev);

    auto describe = [](const std::map<std::string, std::string>& p) {
      std::string s;
      for (const auto& [k, v] : p) s += (s.empty() ? "" : "; ") + k + "=" + v;
      return s;
    };

    std::vector<std::string> slots;
    for (const auto& [slot, _] : train_groups) slots.push_back(slot);
    struct SlotResult {
      std::vector<double> f1;
      std::string failure;
    };
    std::vector<SlotResult> results(slots.size());
    parallel_for(slots.size(), thread_count(config), [&](std::size_t i) {
      const auto& slot = slots[i];
      auto dv = dev_groups.find(slot);
      if (dv == dev_groups.end()) {
        results[i].failure = "no dev instances";
        return;
      }
      try {
        for (const auto& p : points) {
          RunConfig cfg = config;
          for (const auto& [k, v] : p) cfg.set(k, v);
          SlotLog log;
          auto scorer = fit_slot(kind, slot, train_groups.at(slot), dv->second, cfg,
                                 derive_seed(config.seed(), slot), log);
          SlotMetrics m;
          for (const auto& inst : dv->second) {
            m.add(scorer->score(inst) >= threshold, inst.positive);
          }
          results[i].f1.push_back(m.f1());
        }
      } catch (const std::exception& e) {
        results[i].failure = e.what();
      }
    });

    std::string best = "slot\tdev_f1\tconfig\n";
    std::string log = "slot\tpoint\tdev_f1\tconfig\n";
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!results[i].failure.empty()) {
        run.error(slots[i] + ": " + results[i].failure);
        continue;
      }
      std::size_t arg = 0;
      for (std::size_t p = 0; p < points.size(); ++p) {
        log += slots[i] + "\t" + std::to_string(p + 1) + "\t" +
               format_double(results[i].f1[p]) + "\t" + describe(points[p]) + "\n";
        if (results[i].f1[p] > results[i].f1[arg]) arg = p;
      }
      best += slots[i] + "\t" + format_double(results[i].f1[arg]) + "\t" +
              describe(points[arg]) + "\n";
    }
    run.out.write("best.tsv", best);
    run.out.write("grid_log.tsv", log);
    run.details["grid_points"] = points.size();
  });
}

RunReport run_genre_matrix(const RunConfig& config, const fs::path& data,
                           std::span<const std::string> models, const fs::path& out) {
  return execute("genre-matrix", config, out, [&](Run& run) {
    run.config.set("data", data.string());
    std::vector<std::string> model_names(models.begin(), models.end());
    run.config.set("models", join(model_names, ","));
    if (models.empty()) throw Error("genre-matrix needs at least one model");
    const auto instances = load_all_splits(data);

    std::vector<NamedTrainer> trainers;
    for (const auto& name : models) {
      const ModelKind kind = parse_model_kind(name);
      trainers.push_back({name, [kind, &config](std::span<const RelationInstance> train,
                                                std::uint64_t seed) {
                            return train_predictor(kind, train, config, seed);
                          }});
    }
    const auto matrix = genre_matrix(instances, trainers, config.seed());

    std::set<std::string> slots;
    for (const auto& [slot, _] : matrix.train_size) slots.insert(slot);
    std::string header = "# training size per slot (|NEWS_sub| = |WEB|):";
    for (const auto& [slot, n] : matrix.train_size) header += " " + slot + "=" + std::to_string(n);
    std::string text = header + "\nmodel\tsplit\ttrain_genre\ttest_genre\tmacro_f1";
    for (const auto& slot : slots) text += "\t" + slot;
    text += "\n";
    for (const auto& cell : matrix.cells) {
      text += cell.model + "\t" + std::string(to_string(cell.split)) + "\t" +
              std::string(to_string(cell.train_genre)) + "\t" +
              std::string(to_string(cell.test_genre)) + "\t" +
              format_metric(cell.report.macro_f1);
      for (const auto& slot : slots) {
        auto it = cell.report.per_slot.find(slot);
        text += "\t" + (it == cell.report.per_slot.end() ? std::string("-")
                                                          : format_metric(it->second.f1()));
      }
      text += "\n";
    }
    run.out.write("genre_matrix.tsv", text);
    run.details["cells"] = matrix.cells.size();
  });
}

namespace {

// Macro F1 in the last "*.eval" column of a metrics report's average row.
double report_component_f1(const fs::path& path) {
  const auto text = read_file(path);
  LineReader reader(text);
  std::string_view line;
  std::vector<std::string_view> header;
  while (reader.next(line)) {
    if (line.empty() || line.front() == '#') continue;
    auto f = split(line, '\t');
    if (header.empty()) {
      header = f;
      continue;
    }
    if (f[0] != "average") continue;
    for (std::size_t i = f.size(); i-- > 1;) {
      if (i < header.size() && header[i].size() > 5 &&
          header[i].substr(header[i].size() - 5) == ".eval") {
        try {
          return parse_double(f[i]);
        } catch (const Error& e) {
          throw ParseError(path.string(), reader.line_number(), e.what());
        }
      }
    }
    throw ParseError(path.string(), reader.line_number(), "no eval column in report");
  }
  throw Error(path.string() + ": no average row in report");
}

}  // namespace

RunReport run_correlate(const RunConfig& config, std::span<const fs::path> reports,
                        const fs::path& end_to_end, const fs::path& out) {
  return execute("correlate", config, out, [&](Run& run) {
    run.config.set("e2e", end_to_end.string());
    std::vector<std::string> names;
    for (const auto& r : reports) names.push_back(r.string());
    if (!names.empty()) run.config.set("reports", join(names, ","));

    // config name -> (component F1, end-to-end F1), in file order.
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, double>> rows;
    const auto text = read_file(end_to_end);
    LineReader reader(text);
    std::string_view line;
    while (reader.next(line)) {
      if (trim(line).empty() || line.front() == '#') continue;
      auto f = split_whitespace(line);
      if (f.size() != 3) {
        throw ParseError(end_to_end.string(), reader.line_number(),
                         "expected 'config component_f1 end_to_end_f1'");
      }
      if (f[0] == "config") continue;
      try {
        if (!rows.count(f[0])) order.push_back(f[0]);
        rows[f[0]] = {parse_double(f[1]), parse_double(f[2])};
      } catch (const Error& e) {
        throw ParseError(end_to_end.string(), reader.line_number(), e.what());
      }
    }
    std::vector<std::string> used = order;
    if (!reports.empty()) {
      used.clear();
      for (const auto& r : reports) {
        const auto name = r.parent_path().filename().string();
        auto it = rows.find(name);
        if (it == rows.end()) {
          throw Error(r.string() + ": configuration '" + name + "' is not in " +
                      end_to_end.string());
        }
        it->second.first = report_component_f1(r);
        used.push_back(name);
      }
    }
    std::vector<double> xs, ys;
    std::string table = "config\tcomponent_f1\tend_to_end_f1\n";
    for (const auto& name : used) {
      xs.push_back(rows[name].first);
      ys.push_back(rows[name].second);
      table += name + "\t" + format_double(rows[name].first) + "\t" +
               format_double(rows[name].second) + "\n";
    }
    const double r = pearson(xs, ys);
    table += "pearson_r\t" + format_double(r) + "\n";
    run.out.write("correlation.tsv", table);
    run.report.value = r;
    run.details["pearson_r"] = r;
  });
}

}  // namespace relclass
