#include "cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "emsaudit/audit.hpp"
#include "emsaudit/error.hpp"
#include "emsaudit/eval.hpp"
#include "emsaudit/gazetteer.hpp"
#include "emsaudit/io.hpp"
#include "emsaudit/preprocess.hpp"
#include "emsaudit/synth.hpp"

namespace emsaudit::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// ---- Logging ----------------------------------------------------------------

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    const char* env = std::getenv("EMSAUDIT_LOG");
    const std::string v = env ? env : "";
    if (v == "quiet" || v == "error") level_ = LogLevel::kError;
    if (v == "debug") level_ = LogLevel::kDebug;
  }
  void info(const std::string& msg) const { emit(LogLevel::kInfo, "info", msg); }
  void debug(const std::string& msg) const { emit(LogLevel::kDebug, "debug", msg); }
  void error(const std::string& msg) const { err_ << "error: " << msg << "\n"; }

 private:
  void emit(LogLevel level, const char* tag, const std::string& msg) const {
    if (static_cast<int>(level) <= static_cast<int>(level_)) err_ << "[" << tag << "] " << msg << "\n";
  }
  std::ostream& err_;
  LogLevel level_ = LogLevel::kInfo;
};

// ---- Flags ------------------------------------------------------------------

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> gazetteer;
  std::optional<std::string> rules;
  std::optional<std::string> keep_symbols;
  std::optional<int> max_edit_distance;
  std::optional<std::size_t> n_documents;
  std::optional<double> misspelling_rate;
  std::optional<double> split_train, split_dev, split_test;
  std::optional<int> embed_dim, hidden_dim, batch_size, patience, max_epochs, threads;
  std::optional<double> learning_rate;
  std::optional<double> unk_singleton_rate;
  std::optional<std::string> audit_level;
  std::optional<std::string> eval_mode;

  // Stage inputs and outputs; not part of the shared configuration.
  std::string input, output, gold, pred, model, log, train_file, dev_file, overrides, json_out, report_out;
};

template <typename T>
void set_if(T& target, const std::optional<T>& value) {
  if (value) target = *value;
}

void apply_config(Settings& s, const KeyValueConfig& cfg) {
  static const std::set<std::string> known = {
      "seed", "out_dir", "gazetteer", "rules", "keep_symbols", "max_edit_distance",
      "synth.n_documents", "synth.misspelling_rate", "split.train", "split.dev", "split.test",
      "train.embed_dim", "train.hidden_dim", "train.batch_size", "train.learning_rate", "train.patience",
      "train.max_epochs", "train.threads", "train.unk_singleton_rate", "audit.level", "eval.mode"};
  for (const auto& [key, value] : cfg.values()) {
    if (!known.contains(key)) throw Error("unknown configuration key: " + key);
  }
  const auto int_of = [&](const char* key, int& target) {
    if (auto v = cfg.get_int(key)) target = static_cast<int>(*v);
  };
  if (auto v = cfg.get_int("seed")) s.seed = static_cast<std::uint64_t>(*v);
  if (auto v = cfg.get_string("out_dir")) s.out_dir = *v;
  if (auto v = cfg.get_string("gazetteer")) s.gazetteer = *v;
  if (auto v = cfg.get_string("rules")) s.rules = *v;
  if (auto v = cfg.get_string("keep_symbols")) s.keep_symbols = *v;
  int_of("max_edit_distance", s.max_edit_distance);
  if (auto v = cfg.get_int("synth.n_documents")) s.n_documents = static_cast<std::size_t>(*v);
  if (auto v = cfg.get_double("synth.misspelling_rate")) s.misspelling_rate = *v;
  if (auto v = cfg.get_double("split.train")) s.split.train = *v;
  if (auto v = cfg.get_double("split.dev")) s.split.dev = *v;
  if (auto v = cfg.get_double("split.test")) s.split.test = *v;
  int_of("train.embed_dim", s.hp.embed_dim);
  int_of("train.hidden_dim", s.hp.hidden_dim);
  int_of("train.batch_size", s.hp.batch_size);
  int_of("train.patience", s.hp.patience);
  int_of("train.max_epochs", s.hp.max_epochs);
  int_of("train.threads", s.hp.threads);
  if (auto v = cfg.get_double("train.learning_rate")) s.hp.learning_rate = *v;
  if (auto v = cfg.get_double("train.unk_singleton_rate")) s.hp.unk_singleton_rate = *v;
  if (auto v = cfg.get_string("audit.level")) s.audit_level = *v;
  if (auto v = cfg.get_string("eval.mode")) s.eval_mode = *v;
}

Settings resolve(const Flags& f) {
  Settings s;
  if (f.config) {
    // Relative paths inside the file are taken relative to the file.
    const fs::path cfg_path = *f.config;
    apply_config(s, KeyValueConfig::load(cfg_path));
    const fs::path base = cfg_path.parent_path();
    for (fs::path* p : {&s.gazetteer, &s.rules}) {
      if (!p->empty() && p->is_relative()) *p = base / *p;
    }
  }
  set_if(s.seed, f.seed);
  if (f.out_dir) s.out_dir = *f.out_dir;
  if (f.gazetteer) s.gazetteer = *f.gazetteer;
  if (f.rules) s.rules = *f.rules;
  set_if(s.keep_symbols, f.keep_symbols);
  set_if(s.max_edit_distance, f.max_edit_distance);
  set_if(s.n_documents, f.n_documents);
  set_if(s.misspelling_rate, f.misspelling_rate);
  set_if(s.split.train, f.split_train);
  set_if(s.split.dev, f.split_dev);
  set_if(s.split.test, f.split_test);
  set_if(s.hp.embed_dim, f.embed_dim);
  set_if(s.hp.hidden_dim, f.hidden_dim);
  set_if(s.hp.batch_size, f.batch_size);
  set_if(s.hp.patience, f.patience);
  set_if(s.hp.max_epochs, f.max_epochs);
  set_if(s.hp.threads, f.threads);
  set_if(s.hp.learning_rate, f.learning_rate);
  set_if(s.hp.unk_singleton_rate, f.unk_singleton_rate);
  set_if(s.audit_level, f.audit_level);
  set_if(s.eval_mode, f.eval_mode);
  if (!parse_level(s.audit_level)) throw Error("audit level must be case, provider or system");
  if (s.eval_mode != "strict" && s.eval_mode != "type" && s.eval_mode != "both") {
    throw Error("eval mode must be strict, type or both");
  }
  s.hp.seed = s.seed;
  return s;
}

// ---- Shared helpers ---------------------------------------------------------

Gazetteer load_gazetteer(const Settings& s) {
  const Gazetteer base = s.gazetteer.empty() ? Gazetteer::builtin() : Gazetteer::load(s.gazetteer);
  return Gazetteer(base.synonyms(), s.max_edit_distance);
}

ProtocolTable load_rules(const Settings& s) {
  return s.rules.empty() ? ProtocolTable::builtin() : ProtocolTable::load(s.rules);
}

NormalizeOptions normalize_options(const Settings& s) { return NormalizeOptions{s.keep_symbols}; }

std::vector<CaseRecord> load_checked(const fs::path& path) {
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  LoadResult loaded = load_records(path);
  if (!loaded.errors.empty()) {
    const auto& e = loaded.errors.front();
    throw Error(path.string() + ":" + std::to_string(e.line) + ": " + e.message);
  }
  return std::move(loaded.records);
}

json extra_of(const CaseRecord& rec) { return json::parse(rec.extra_json.empty() ? "{}" : rec.extra_json); }

void set_extra(CaseRecord& rec, const std::string& key, json value) {
  json extra = extra_of(rec);
  extra[key] = std::move(value);
  rec.extra_json = extra.dump();
}

std::vector<std::string> tokens_of(const CaseRecord& rec, const NormalizeOptions& opts) {
  const json extra = extra_of(rec);
  if (extra.contains("tokens")) return extra.at("tokens").get<std::vector<std::string>>();
  return tokenize(normalize(rec.report_text, opts)).tokens;
}

json tags_to_json(const std::vector<Tag>& tags) {
  json arr = json::array();
  for (const Tag& t : tags) arr.push_back(t.str());
  return arr;
}

std::vector<Tag> tags_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array()) throw Error(where + ": tags must be an array");
  std::vector<Tag> tags;
  for (const auto& v : arr) {
    const auto tag = parse_tag(v.get<std::string>());
    if (!tag) throw Error(where + ": unknown tag " + v.get<std::string>());
    tags.push_back(*tag);
  }
  return tags;
}

std::vector<Tag> tags_of(const CaseRecord& rec) {
  const json extra = extra_of(rec);
  if (!extra.contains("tags")) throw Error("record " + rec.incident_id + " has no tags");
  return tags_from_json(extra.at("tags"), rec.incident_id);
}

// Any JSONL whose objects carry incident_id, tokens and tags.
std::vector<TaggedDocument> load_tagged(const fs::path& path) {
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  std::vector<TaggedDocument> docs;
  std::size_t line_no = 0;
  for (const auto& line : io::read_lines(path)) {
    ++line_no;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(where + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("incident_id") || !obj.contains("tags") || !obj.contains("tokens")) {
      throw Error(where + ": expected incident_id, tokens and tags");
    }
    TaggedDocument doc;
    doc.incident_id = obj.at("incident_id").get<std::string>();
    doc.tokens = obj.at("tokens").get<std::vector<std::string>>();
    doc.tags = tags_from_json(obj.at("tags"), where);
    if (doc.tags.size() != doc.tokens.size()) throw Error(where + ": tokens and tags differ in length");
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

// ---- Stages -----------------------------------------------------------------

void stage_gen(const Settings& s, const fs::path& records_out, const fs::path& gold_out, const Log& log) {
  SynthConfig cfg;
  cfg.n_documents = s.n_documents;
  cfg.misspelling_rate = s.misspelling_rate;
  cfg.seed = s.seed;
  const auto docs = generate_corpus(cfg, load_gazetteer(s));
  std::vector<CaseRecord> records;
  std::vector<json> gold;
  std::size_t mentions = 0;
  std::size_t misspelled = 0;
  for (const auto& d : docs) {
    records.push_back(d.record);
    json spans = json::array();
    for (const auto& sp : d.gold) {
      spans.push_back({{"entity", std::string(entity_name(sp.entity))}, {"start", sp.start}, {"end", sp.end}});
    }
    gold.push_back({{"incident_id", d.record.incident_id},
                    {"tokens", d.tokens},
                    {"tags", tags_to_json(tags_from_spans(d.gold, d.tokens.size()))},
                    {"spans", spans}});
    mentions += d.gold.size();
    misspelled += d.misspelled_mentions;
  }
  write_records(records_out, records);
  if (!gold_out.empty()) io::write_file_atomic(gold_out, jsonl(gold));
  log.info("gen: " + std::to_string(docs.size()) + " documents, " + std::to_string(mentions) + " mentions, " +
           std::to_string(misspelled) + " misspelled");
}

void stage_preprocess(const Settings& s, const fs::path& in, const fs::path& out, const Log& log) {
  const FilterResult filtered = filter_encounters_counted(load_checked(in));
  const NormalizeOptions opts = normalize_options(s);
  std::vector<CaseRecord> records = filtered.kept;
  for (auto& rec : records) set_extra(rec, "tokens", tokenize(normalize(rec.report_text, opts)).tokens);
  write_records(out, records);
  log.info("preprocess: kept " + std::to_string(records.size()) + ", dropped " +
           std::to_string(filtered.no_encounter) + " without patient encounter and " +
           std::to_string(filtered.missing_text) + " without report text");
}

void stage_label(const Settings& s, const fs::path& in, const fs::path& out, const fs::path& overrides,
                 const Log& log) {
  const Gazetteer gazetteer = load_gazetteer(s);
  const NormalizeOptions opts = normalize_options(s);
  std::vector<CaseRecord> records = load_checked(in);
  std::map<std::string, std::vector<Tag>> tags;
  std::size_t entities = 0;
  for (auto& rec : records) {
    TokenizedSentence sentence{tokens_of(rec, opts), rec.incident_id};
    set_extra(rec, "tokens", sentence.tokens);
    auto t = weak_label(sentence, gazetteer);
    entities += spans_from_tags(t).size();
    tags[rec.incident_id] = std::move(t);
  }
  std::size_t patched = 0;
  if (!overrides.empty()) patched = apply_overrides(tags, load_overrides(overrides));
  for (auto& rec : records) set_extra(rec, "tags", tags_to_json(tags.at(rec.incident_id)));
  write_records(out, records);
  log.info("label: " + std::to_string(records.size()) + " records, " + std::to_string(entities) +
           " weak entities, " + std::to_string(patched) + " overrides applied");
}

void stage_split(const Settings& s, const fs::path& in, const fs::path& out_dir, const Log& log) {
  const DatasetSplit split = split_dataset(load_checked(in), s.split, s.seed);
  write_records(out_dir / "train.jsonl", split.train);
  write_records(out_dir / "dev.jsonl", split.dev);
  write_records(out_dir / "test.jsonl", split.test);
  log.info("split: train " + std::to_string(split.train.size()) + ", dev " + std::to_string(split.dev.size()) +
           ", test " + std::to_string(split.test.size()));
}

std::vector<LabeledSentence> labeled_from(const fs::path& path, const NormalizeOptions& opts) {
  std::vector<LabeledSentence> out;
  for (const auto& rec : load_checked(path)) {
    LabeledSentence s{tokens_of(rec, opts), tags_of(rec)};
    if (s.tokens.size() != s.tags.size()) throw Error("record " + rec.incident_id + ": tokens and tags differ");
    out.push_back(std::move(s));
  }
  return out;
}

void stage_train(const Settings& s, const fs::path& train_path, const fs::path& dev_path, const fs::path& model_out,
                 const fs::path& log_out, const Log& log) {
  const NormalizeOptions opts = normalize_options(s);
  const auto train_set = labeled_from(train_path, opts);
  const auto dev_set = dev_path.empty() ? std::vector<LabeledSentence>{} : labeled_from(dev_path, opts);
  log.info("train: " + std::to_string(train_set.size()) + " train / " + std::to_string(dev_set.size()) +
           " dev sentences, batch " + std::to_string(s.hp.batch_size) + ", seed " + std::to_string(s.hp.seed));
  TrainOptions options;
  options.on_epoch = [&log](const EpochRecord& r) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "epoch " << r.epoch << " train_loss " << r.train_loss << " dev_loss " << r.dev_loss << " ("
        << r.elapsed_ms << " ms)";
    log.debug(msg.str());
  };
  const TrainResult result = train(train_set, dev_set, s.hp, options);
  save_model(result.model, model_out);
  if (!log_out.empty()) io::write_file_atomic(log_out, result.log.to_csv());
  const auto& last = result.log.epochs.back();
  log.info("train: " + std::to_string(result.log.epochs.size()) + " epochs, best " +
           std::to_string(result.log.best_epoch) + (result.log.early_stopped ? " (early stop)" : "") + ", " +
           std::to_string(last.elapsed_ms / 1000) + " s");
}

void stage_predict(const Settings& s, const fs::path& model_path, const fs::path& in, const fs::path& out,
                   const Log& log) {
  if (!fs::exists(model_path)) throw Error("no such file: " + model_path.string());
  const TaggerModel model = load_model(model_path);
  const NormalizeOptions opts = normalize_options(s);
  std::vector<CaseRecord> records = load_checked(in);
  std::size_t entities = 0;
  for (auto& rec : records) {
    const auto tokens = tokens_of(rec, opts);
    const auto tags = predict(model, tokens);
    entities += spans_from_tags(tags).size();
    set_extra(rec, "tokens", tokens);
    set_extra(rec, "tags", tags_to_json(tags));
  }
  write_records(out, records);
  log.info("predict: " + std::to_string(records.size()) + " records, " + std::to_string(entities) + " entities");
}

void check_mode(const std::string& mode) {
  if (mode != "strict" && mode != "type" && mode != "both") {
    throw Error("eval mode must be strict, type or both, got '" + mode + "'");
  }
}

EvaluationReport stage_eval(const Settings& s, const fs::path& gold, const fs::path& pred, const fs::path& json_out,
                            const fs::path& report_out, std::ostream& out) {
  check_mode(s.eval_mode);
  const EvaluationReport report = evaluate(load_tagged(gold), load_tagged(pred));
  const std::string text = report.to_text(s.eval_mode != "type", s.eval_mode != "strict");
  out << text;
  if (!json_out.empty()) io::write_file_atomic(json_out, report.to_json() + "\n");
  if (!report_out.empty()) io::write_file_atomic(report_out, text);
  return report;
}

void stage_audit(const Settings& s, const fs::path& in, const fs::path& json_out, const fs::path& report_out,
                 std::ostream& out, const Log& log) {
  const auto level = parse_level(s.audit_level);
  if (!level) throw Error("audit level must be case, provider or system, got '" + s.audit_level + "'");
  const ProtocolTable rules = load_rules(s);
  std::vector<AuditResult> results;
  for (const auto& rec : load_checked(in)) {
    const auto spans = spans_from_tags(tags_of(rec));
    for (auto& r : evaluate_case(rec, spans, rules)) results.push_back(std::move(r));
  }
  std::string text;
  std::string js;
  if (results.empty()) {
    text = "no case matched any audited scenario\n";
    js = json({{"level", std::string(level_name(*level))}, {"cases", json::array()}, {"tallies", json::array()}})
             .dump(2);
  } else {
    const AuditReport report = aggregate(results, *level);
    text = report.to_text();
    js = report.to_json();
  }
  out << text;
  if (!json_out.empty()) io::write_file_atomic(json_out, js + "\n");
  if (!report_out.empty()) io::write_file_atomic(report_out, text);
  log.info("audit: " + std::to_string(results.size()) + " scenario instances at " + s.audit_level + " level");
}

// Stands in for clinician review of the dev and test splits: every token whose
// weak label differs from the synthetic gold becomes an override patch.
void write_gold_overrides(const std::vector<fs::path>& labeled, const fs::path& gold_path, const fs::path& out,
                          const Log& log) {
  std::map<std::string, TaggedDocument> gold;
  for (auto& d : load_tagged(gold_path)) gold.emplace(d.incident_id, std::move(d));
  std::vector<json> rows;
  for (const auto& path : labeled) {
    for (const auto& rec : load_checked(path)) {
      const auto it = gold.find(rec.incident_id);
      if (it == gold.end()) throw Error("no gold annotation for " + rec.incident_id);
      const auto weak = tags_of(rec);
      if (weak.size() != it->second.tags.size()) throw Error("gold length mismatch for " + rec.incident_id);
      for (std::size_t i = 0; i < weak.size(); ++i) {
        if (weak[i] != it->second.tags[i]) {
          rows.push_back({{"incident_id", rec.incident_id}, {"index", i}, {"tag", it->second.tags[i].str()}});
        }
      }
    }
  }
  io::write_file_atomic(out, jsonl(rows));
  log.info("verify: " + std::to_string(rows.size()) + " token corrections for dev/test");
}

void apply_override_file(const fs::path& in, const fs::path& overrides, const fs::path& out) {
  std::vector<CaseRecord> records = load_checked(in);
  std::map<std::string, std::vector<Tag>> tags;
  for (const auto& rec : records) tags[rec.incident_id] = tags_of(rec);
  std::vector<TagOverride> relevant;
  for (auto& o : load_overrides(overrides)) {
    if (tags.contains(o.incident_id)) relevant.push_back(std::move(o));
  }
  apply_overrides(tags, relevant);
  for (auto& rec : records) set_extra(rec, "tags", tags_to_json(tags.at(rec.incident_id)));
  write_records(out, records);
}

void stage_pipeline(const Settings& s, std::ostream& out, const Log& log) {
  // Validate every referenced input before any stage runs.
  load_gazetteer(s);
  load_rules(s);
  check_mode(s.eval_mode);
  if (!parse_level(s.audit_level)) throw Error("audit level must be case, provider or system");
  s.hp.validate();

  const fs::path dir = s.out_dir;
  fs::create_directories(dir / "split");
  stage_gen(s, dir / "corpus.jsonl", dir / "gold.jsonl", log);
  stage_preprocess(s, dir / "corpus.jsonl", dir / "preprocessed.jsonl", log);
  stage_label(s, dir / "preprocessed.jsonl", dir / "labeled.jsonl", {}, log);
  stage_split(s, dir / "labeled.jsonl", dir / "split", log);
  write_gold_overrides({dir / "split" / "dev.jsonl", dir / "split" / "test.jsonl"}, dir / "gold.jsonl",
                       dir / "overrides.jsonl", log);
  apply_override_file(dir / "split" / "dev.jsonl", dir / "overrides.jsonl", dir / "split" / "dev_verified.jsonl");
  apply_override_file(dir / "split" / "test.jsonl", dir / "overrides.jsonl", dir / "split" / "test_verified.jsonl");
  stage_train(s, dir / "split" / "train.jsonl", dir / "split" / "dev_verified.jsonl", dir / "model.bin",
              dir / "training_log.csv", log);
  stage_predict(s, dir / "model.bin", dir / "split" / "test.jsonl", dir / "predictions.jsonl", log);
  const EvaluationReport report = stage_eval(s, dir / "split" / "test_verified.jsonl", dir / "predictions.jsonl",
                                             dir / "eval.json", dir / "eval.txt", out);
  out << "\n";
  stage_audit(s, dir / "predictions.jsonl", dir / "audit.json", dir / "audit.txt", out, log);
  log.info("pipeline: entity-type F1 " + fixed3(muc5_scores(report.entity_type).f1) + ", strict F1 " +
           fixed3(muc5_scores(report.strict).f1));
}

// ---- Command line -----------------------------------------------------------

void add_shared(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "Key/value configuration file");
  cmd.add_option("--seed", f.seed, "Seed for every stochastic stage (default 7)");
}

void add_gazetteer(CLI::App& cmd, Flags& f) {
  cmd.add_option("--gazetteer", f.gazetteer, "Synonym list (TSV); built-in list when omitted");
  cmd.add_option("--max-edit-distance", f.max_edit_distance, "Fuzzy matching budget");
}

void add_normalize(CLI::App& cmd, Flags& f) {
  cmd.add_option("--keep-symbols", f.keep_symbols, "Extra ASCII symbols kept by normalization");
}

void add_hyperparams(CLI::App& cmd, Flags& f) {
  cmd.add_option("--embed-dim", f.embed_dim);
  cmd.add_option("--hidden-dim", f.hidden_dim);
  cmd.add_option("--batch-size", f.batch_size);
  cmd.add_option("--learning-rate", f.learning_rate);
  cmd.add_option("--patience", f.patience);
  cmd.add_option("--max-epochs", f.max_epochs);
  cmd.add_option("--threads", f.threads, "Worker threads; results do not depend on it");
  cmd.add_option("--unk-singleton-rate", f.unk_singleton_rate, "Chance a singleton token trains as UNK");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err);
  Flags f;
  CLI::App app{"Weakly supervised clinical entity tagging and protocol audit for EMS reports", "emsaudit"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("gen", "Generate a synthetic corpus with gold annotations");
  add_shared(*gen, f);
  add_gazetteer(*gen, f);
  gen->add_option("--out", f.output, "Record JSONL")->required();
  gen->add_option("--gold", f.gold, "Gold annotation JSONL");
  gen->add_option("--n", f.n_documents, "Number of documents");
  gen->add_option("--misspelling-rate", f.misspelling_rate);

  auto* pre = app.add_subcommand("preprocess", "Filter records and tokenize report text");
  add_shared(*pre, f);
  add_normalize(*pre, f);
  pre->add_option("--input", f.input)->required();
  pre->add_option("--output", f.output)->required();

  auto* label = app.add_subcommand("label", "Weakly label tokens with the gazetteer");
  add_shared(*label, f);
  add_gazetteer(*label, f);
  add_normalize(*label, f);
  label->add_option("--input", f.input)->required();
  label->add_option("--output", f.output)->required();
  label->add_option("--overrides", f.overrides, "JSONL of tag corrections applied after labelling");

  auto* split = app.add_subcommand("split", "Split records into train/dev/test");
  add_shared(*split, f);
  split->add_option("--input", f.input)->required();
  split->add_option("--out-dir", f.out_dir);
  split->add_option("--train-fraction", f.split_train);
  split->add_option("--dev-fraction", f.split_dev);
  split->add_option("--test-fraction", f.split_test);

  auto* tr = app.add_subcommand("train", "Train the BiLSTM-CRF tagger");
  add_shared(*tr, f);
  add_normalize(*tr, f);
  add_hyperparams(*tr, f);
  tr->add_option("--train", f.train_file, "Labelled records")->required();
  tr->add_option("--dev", f.dev_file, "Labelled dev records for early stopping");
  tr->add_option("--model", f.model, "Checkpoint output")->required();
  tr->add_option("--log", f.log, "Per-epoch CSV log");

  auto* pr = app.add_subcommand("predict", "Tag records with a trained model");
  add_shared(*pr, f);
  add_normalize(*pr, f);
  pr->add_option("--model", f.model)->required();
  pr->add_option("--input", f.input)->required();
  pr->add_option("--output", f.output)->required();

  auto* ev = app.add_subcommand("eval", "Score predicted tags against gold tags");
  add_shared(*ev, f);
  ev->add_option("--gold", f.gold)->required();
  ev->add_option("--pred", f.pred)->required();
  ev->add_option("--mode", f.eval_mode, "strict, type or both");
  ev->add_option("--json", f.json_out, "JSON report output");
  ev->add_option("--report", f.report_out, "Text report output");

  auto* au = app.add_subcommand("audit", "Check documented actions against protocol rules");
  add_shared(*au, f);
  au->add_option("--input", f.input, "Tagged records")->required();
  au->add_option("--rules", f.rules, "Protocol rules file; built-in table when omitted");
  au->add_option("--level", f.audit_level, "case, provider or system");
  au->add_option("--json", f.json_out);
  au->add_option("--report", f.report_out);

  auto* pipe = app.add_subcommand("pipeline", "Run gen through audit end to end");
  add_shared(*pipe, f);
  add_gazetteer(*pipe, f);
  add_hyperparams(*pipe, f);
  pipe->add_option("--out-dir", f.out_dir);
  pipe->add_option("--rules", f.rules);
  pipe->add_option("--n", f.n_documents);
  pipe->add_option("--misspelling-rate", f.misspelling_rate);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto chosen = app.get_subcommands();
    err << (chosen.empty() ? app.help() : chosen.front()->help());
    return kExitUsage;
  }

  Settings s;
  try {
    s = resolve(f);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      stage_gen(s, f.output, f.gold, log);
    } else if (pre->parsed()) {
      stage_preprocess(s, f.input, f.output, log);
    } else if (label->parsed()) {
      stage_label(s, f.input, f.output, f.overrides, log);
    } else if (split->parsed()) {
      stage_split(s, f.input, s.out_dir, log);
    } else if (tr->parsed()) {
      stage_train(s, f.train_file, f.dev_file, f.model, f.log, log);
    } else if (pr->parsed()) {
      stage_predict(s, f.model, f.input, f.output, log);
    } else if (ev->parsed()) {
      stage_eval(s, f.gold, f.pred, f.json_out, f.report_out, out);
    } else if (au->parsed()) {
      stage_audit(s, f.input, f.json_out, f.report_out, out, log);
    } else if (pipe->parsed()) {
      stage_pipeline(s, out, log);
    }
  } catch (const std::exception& e) {
    log.error(e.what());
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace emsaudit::cli
