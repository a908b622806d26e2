#include "reid/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string_view>

#include "reid/error.hpp"
#include "reid/manifest.hpp"

namespace reid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key + ": expected " + expected + ", got '" + value + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size()) {
    bad_value(key, value, "a nonnegative integer");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(const std::string& key, const std::string& value) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size() || std::isnan(v)) {
    bad_value(key, value, "a real number");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  std::string_view rest = value;
  while (!trim(rest).empty()) {
    const auto cut = rest.find(',');
    out.push_back(parse_size(key, std::string(trim(rest.substr(0, cut)))));
    if (cut == std::string_view::npos) break;
    rest.remove_prefix(cut + 1);
  }
  return out;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(xs[i]);
  }
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

struct KeyDef {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Field>
KeyDef size_key(std::string key, Field field) {
  return {key, [key, field](RunConfig& c, const std::string& v) { field(c) = parse_size(key, v); },
          [field](const RunConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
KeyDef real_key(std::string key, Field field) {
  return {key, [key, field](RunConfig& c, const std::string& v) { field(c) = parse_real(key, v); },
          [field](const RunConfig& c) { return format_real(field(c)); }};
}

template <typename Field>
KeyDef bool_key(std::string key, Field field) {
  return {key, [key, field](RunConfig& c, const std::string& v) { field(c) = parse_bool(key, v); },
          [field](const RunConfig& c) { return bool_text(field(c)); }};
}

template <typename Field>
KeyDef string_key(std::string key, Field field) {
  return {key, [field](RunConfig& c, const std::string& v) { field(c) = v; },
          [field](const RunConfig& c) { return field(c); }};
}

void add_strategy(std::vector<KeyDef>& keys, const std::string& name,
                  AugmentStrategy AugmentConfig::*member) {
  const std::string base = "augment." + name;
  keys.push_back(bool_key(base + "_enabled", [member](auto& c) -> auto& { return (c.augment.*member).enabled; }));
  keys.push_back(real_key(base + "_probability", [member](auto& c) -> auto& { return (c.augment.*member).probability; }));
  keys.push_back(real_key(base + "_magnitude", [member](auto& c) -> auto& { return (c.augment.*member).magnitude; }));
}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = [] {
    std::vector<KeyDef> k;
    k.push_back({"run.seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64("run.seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    k.push_back(string_key("run.dataset", [](auto& c) -> auto& { return c.dataset; }));
    k.push_back(string_key("run.output", [](auto& c) -> auto& { return c.output; }));
    k.push_back(string_key("run.dataset_name", [](auto& c) -> auto& { return c.dataset_name; }));
    k.push_back(string_key("run.model_tag", [](auto& c) -> auto& { return c.model_tag; }));
    k.push_back(string_key("run.checkpoint", [](auto& c) -> auto& { return c.checkpoint; }));
    k.push_back({"run.fold",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "all") {
                     c.fold.reset();
                   } else {
                     c.fold = parse_size("run.fold", v);
                   }
                 },
                 [](const RunConfig& c) { return c.fold ? std::to_string(*c.fold) : std::string("all"); }});

    k.push_back(real_key("split.train", [](auto& c) -> auto& { return c.split.ratios[0]; }));
    k.push_back(real_key("split.val", [](auto& c) -> auto& { return c.split.ratios[1]; }));
    k.push_back(real_key("split.test", [](auto& c) -> auto& { return c.split.ratios[2]; }));
    k.push_back(size_key("split.folds", [](auto& c) -> auto& { return c.split.folds; }));

    k.push_back({"loss.kind", [](RunConfig& c, const std::string& v) { c.loss_kind = parse_loss_kind(v); },
                 [](const RunConfig& c) { return std::string(to_string(c.loss_kind)); }});
    k.push_back(real_key("loss.margin", [](auto& c) -> auto& { return c.loss.margin; }));
    k.push_back(bool_key("loss.squared", [](auto& c) -> auto& { return c.loss.squared_distances; }));

    k.push_back(real_key("optim.lr", [](auto& c) -> auto& { return c.optim.lr; }));
    k.push_back(real_key("optim.beta1", [](auto& c) -> auto& { return c.optim.beta1; }));
    k.push_back(real_key("optim.beta2", [](auto& c) -> auto& { return c.optim.beta2; }));
    k.push_back(real_key("optim.epsilon", [](auto& c) -> auto& { return c.optim.epsilon; }));
    k.push_back(real_key("optim.decay", [](auto& c) -> auto& { return c.optim.decay_per_epoch; }));
    k.push_back({"optim.decay_mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "lr") {
                     c.optim.decay_mode = DecayMode::learning_rate;
                   } else if (v == "weight") {
                     c.optim.decay_mode = DecayMode::weight_decay;
                   } else {
                     bad_value("optim.decay_mode", v, "'lr' or 'weight'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.optim.decay_mode == DecayMode::learning_rate ? "lr" : "weight");
                 }});
    k.push_back(size_key("optim.epochs", [](auto& c) -> auto& { return c.optim.epochs; }));
    k.push_back(size_key("optim.batch_size", [](auto& c) -> auto& { return c.optim.batch_size; }));
    k.push_back(size_key("optim.images_per_individual",
                         [](auto& c) -> auto& { return c.optim.images_per_individual; }));
    k.push_back(size_key("optim.patience",
                         [](auto& c) -> auto& { return c.optim.early_stopping_patience; }));

    k.push_back({"model.hidden",
                 [](RunConfig& c, const std::string& v) { c.model.hidden = parse_sizes("model.hidden", v); },
                 [](const RunConfig& c) { return join(c.model.hidden); }});
    k.push_back(size_key("model.embedding_dim", [](auto& c) -> auto& { return c.model.embedding_dim; }));
    k.push_back(bool_key("model.l2_normalize", [](auto& c) -> auto& { return c.model.l2_normalize; }));

    add_strategy(k, "mirror", &AugmentConfig::mirror);
    add_strategy(k, "shift", &AugmentConfig::shift);
    add_strategy(k, "rotation", &AugmentConfig::rotation);
    add_strategy(k, "colour_noise", &AugmentConfig::colour_noise);
    add_strategy(k, "pixel_noise", &AugmentConfig::pixel_noise);
    add_strategy(k, "blur", &AugmentConfig::blur);
    add_strategy(k, "dropout", &AugmentConfig::dropout);

    k.push_back(size_key("eval.repetitions", [](auto& c) -> auto& { return c.eval.repetitions; }));
    k.push_back({"eval.k", [](RunConfig& c, const std::string& v) { c.eval.k_values = parse_sizes("eval.k", v); },
                 [](const RunConfig& c) { return join(c.eval.k_values); }});
    k.push_back({"eval.metric",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "ap") {
                     c.eval.metric = RankMetric::average_precision;
                   } else if (v == "hit") {
                     c.eval.metric = RankMetric::hit_rate;
                   } else {
                     bad_value("eval.metric", v, "'ap' or 'hit'");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.eval.metric == RankMetric::average_precision ? "ap" : "hit");
                 }});

    k.push_back({"census.threshold",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "auto") {
                     c.census.threshold.reset();
                   } else {
                     c.census.threshold = parse_real("census.threshold", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.census.threshold ? format_real(*c.census.threshold) : std::string("auto");
                 }});
    k.push_back(size_key("census.max_exemplars", [](auto& c) -> auto& { return c.census.max_exemplars; }));
    k.push_back(bool_key("census.shuffle", [](auto& c) -> auto& { return c.census.shuffle; }));

    k.push_back(size_key("synth.individuals", [](auto& c) -> auto& { return c.synth.num_individuals; }));
    k.push_back(size_key("synth.images", [](auto& c) -> auto& { return c.synth.images_per_individual; }));
    k.push_back(size_key("synth.dim", [](auto& c) -> auto& { return c.synth.feature_dim; }));
    k.push_back(real_key("synth.spread", [](auto& c) -> auto& { return c.synth.cluster_spread; }));
    k.push_back(real_key("synth.separation", [](auto& c) -> auto& { return c.synth.inter_cluster_distance; }));
    k.push_back(size_key("synth.nuisance_dims", [](auto& c) -> auto& { return c.synth.nuisance_dims; }));
    k.push_back(real_key("synth.nuisance_spread", [](auto& c) -> auto& { return c.synth.nuisance_spread; }));

    k.push_back(size_key("bench.seeds", [](auto& c) -> auto& { return c.bench.seeds; }));
    k.push_back(size_key("bench.train_individuals",
                         [](auto& c) -> auto& { return c.bench.train_individuals; }));
    k.push_back(size_key("bench.test_individuals",
                         [](auto& c) -> auto& { return c.bench.test_individuals; }));
    k.push_back(real_key("bench.spread", [](auto& c) -> auto& { return c.bench.spread; }));
    return k;
  }();
  return table;
}

const KeyDef* find_key(const std::string& key) {
  for (const auto& def : key_table()) {
    if (def.key == key) return &def;
  }
  return nullptr;
}

}  // namespace

std::vector<std::size_t> ModelConfig::layer_dims(std::size_t input_dim) const {
  std::vector<std::size_t> dims{input_dim};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(embedding_dim);
  return dims;
}

void RunConfig::validate() const {
  split.validate();
  loss.validate();
  optim.validate();
  augment.validate();
  eval.validate();
  synth.validate();
  if (fold && *fold >= split.folds) {
    throw ConfigError("run.fold must be below split.folds (" + std::to_string(split.folds) + ")");
  }
  if (model.embedding_dim == 0) throw ConfigError("model.embedding_dim must be positive");
  for (std::size_t h : model.hidden) {
    if (h == 0) throw ConfigError("model.hidden entries must be positive");
  }
  if (census.threshold && !(*census.threshold >= 0.0)) {
    throw ConfigError("census.threshold must be >= 0, 'inf' or 'auto'");
  }
  if (census.max_exemplars == 0) throw ConfigError("census.max_exemplars must be at least 1");
  if (bench.seeds == 0) throw ConfigError("bench.seeds must be at least 1");
  if (bench.train_individuals < 2) throw ConfigError("bench.train_individuals must be at least 2");
  if (bench.test_individuals < 2) throw ConfigError("bench.test_individuals must be at least 2");
  if (!(bench.spread >= 0.0) || !std::isfinite(bench.spread)) throw ConfigError("bench.spread must be finite and >= 0");
  if (output.empty()) throw ConfigError("run.output must not be empty");
}

ConfigMap parse_config(std::istream& in, const std::string& source) {
  ConfigMap values;
  std::string section;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view row = line;
    if (const auto hash = row.find('#'); hash != std::string_view::npos) row = row.substr(0, hash);
    row = trim(row);
    if (row.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (row.front() == '[') {
      if (row.back() != ']' || row.size() < 3) throw ConfigError(where + "malformed section header");
      section = std::string(trim(row.substr(1, row.size() - 2)));
      continue;
    }
    const auto eq = row.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = std::string(trim(row.substr(0, eq)));
    if (key.empty()) throw ConfigError(where + "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    values[full] = std::string(trim(row.substr(eq + 1)));
  }
  return values;
}

ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

void apply_config(RunConfig& cfg, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    const KeyDef* def = find_key(key);
    if (def == nullptr) throw ConfigError("unknown config key '" + key + "'");
    def->set(cfg, value);
  }
}

void apply_assignment(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("expected section.key=value, got '" + assignment + "'");
  apply_config(cfg, {{std::string(trim(std::string_view(assignment).substr(0, eq))),
                      std::string(trim(std::string_view(assignment).substr(eq + 1)))}});
}

ConfigMap to_config_map(const RunConfig& cfg) {
  ConfigMap out;
  for (const auto& def : key_table()) out[def.key] = def.get(cfg);
  return out;
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  std::string section;
  for (const auto& def : key_table()) {
    const auto dot = def.key.find('.');
    const std::string sec = def.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << def.key.substr(dot + 1) << " = " << def.get(cfg) << '\n';
  }
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& def : key_table()) keys.push_back(def.key);
  return keys;
}

}  // namespace reid
