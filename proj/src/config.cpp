#include "ptcl/config.hpp"

#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ptcl {

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out = "invalid config:";
  for (const auto& s : items) out += "\n  - " + s;
  return out;
}

/// Reads one JSON object, recording type errors and unknown keys.
class Section {
 public:
  Section(const Json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(&errors) {
    if (obj_ != nullptr && !obj_->is_object()) {
      error("", "must be an object");
      obj_ = nullptr;
    }
  }

  void get(const char* key, std::size_t& out) {
    if (const Json* v = find(key)) {
      if (v->is_number_unsigned() || (v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
        out = v->get<std::size_t>();
      } else {
        error(key, "must be a non-negative integer");
      }
    }
  }

  void get(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        error(key, "must be a number");
      }
    }
  }

  void get(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        error(key, "must be true or false");
      }
    }
  }

  void get(const char* key, std::string& out) {
    if (const Json* v = find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        error(key, "must be a string");
      }
    }
  }

  void get(const char* key, std::vector<double>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) return error(key, "must be an array of numbers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number()) return error(key, "must be an array of numbers");
        out.push_back(x.get<double>());
      }
    }
  }

  void get(const char* key, std::vector<std::uint64_t>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array()) return error(key, "must be an array of non-negative integers");
      out.clear();
      for (const auto& x : *v) {
        if (!x.is_number_unsigned() && !(x.is_number_integer() && x.get<std::int64_t>() >= 0)) {
          return error(key, "must be an array of non-negative integers");
        }
        out.push_back(x.get<std::uint64_t>());
      }
    }
  }

  /// Parses an enum through `parse`, reporting its message on failure.
  template <class E, class Parse>
  void get_enum(const char* key, E& out, Parse parse) {
    std::string text;
    if (find(key) == nullptr) return;
    get(key, text);
    if (text.empty()) return;
    try {
      out = parse(text);
    } catch (const std::exception& e) {
      error(key, e.what());
    }
  }

  Section child(const char* key) { return Section(find(key), qualified(key), *errors_); }

  void finish() const {
    if (obj_ == nullptr) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.count(key)) errors_->push_back(qualified(key.c_str()) + ": unknown key");
    }
  }

  void check(const std::function<void()>& validate) const {
    try {
      validate();
    } catch (const std::exception& e) {
      errors_->push_back((path_.empty() ? std::string("config") : path_) + ": " + e.what());
    }
  }

 private:
  const Json* find(const char* key) {
    seen_.insert(key);
    if (obj_ == nullptr) return nullptr;
    const auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  std::string qualified(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void error(const char* key, const std::string& what) {
    errors_->push_back((*key ? qualified(key) : path_) + ": " + what);
  }

  const Json* obj_;
  std::string path_;
  std::vector<std::string>* errors_;
  std::set<std::string> seen_;
};

DatasetKind parse_dataset_kind(const std::string& text) {
  if (text == "generic") return DatasetKind::generic;
  if (text == "jodie") return DatasetKind::jodie;
  if (text == "synthetic") return DatasetKind::synthetic;
  throw std::invalid_argument("unknown dataset kind '" + text + "' (expected generic, jodie or synthetic)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::generic: return "generic";
    case DatasetKind::jodie: return "jodie";
    case DatasetKind::synthetic: return "synthetic";
  }
  return "generic";
}

SplitMode parse_split_mode(const std::string& text) {
  if (text == "chronological") return SplitMode::chronological;
  if (text == "stratified") return SplitMode::stratified;
  throw std::invalid_argument("unknown split mode '" + text + "' (expected chronological or stratified)");
}

SamplerBackend parse_backend(const std::string& text) {
  if (text == "reference") return SamplerBackend::reference;
  if (text == "native") return SamplerBackend::native;
  throw std::invalid_argument("unknown sampler backend '" + text + "' (expected reference or native)");
}

void read_drift(Section s, DriftConfig& d) {
  s.get("node_count", d.node_count);
  s.get("event_count", d.event_count);
  s.get("class_count", d.class_count);
  s.get("switch_probability", d.switch_probability);
  s.get("homophily", d.homophily);
  s.get("feature_noise", d.feature_noise);
  s.get("seed", d.seed);
  s.get("node_feature_dim", d.node_feature_dim);
  s.get("edge_feature_dim", d.edge_feature_dim);
  s.get("class_prior", d.class_prior);
  s.finish();
  s.check([&] { d.validate(); });
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join(problems)), problems_(std::move(problems)) {}

std::string to_string(SplitMode mode) { return mode == SplitMode::chronological ? "chronological" : "stratified"; }
std::string to_string(SamplerBackend backend) { return backend == SamplerBackend::reference ? "reference" : "native"; }

RunConfig parse_run_config(const Json& doc) {
  std::vector<std::string> errors;
  RunConfig cfg;
  Section root(&doc, "", errors);

  {
    Section s = root.child("dataset");
    s.get_enum("kind", cfg.dataset.kind, parse_dataset_kind);
    s.get("path", cfg.dataset.path);
    s.get("drop_dynamic_labels", cfg.dataset.drop_dynamic_labels);
    read_drift(s.child("synthetic"), cfg.dataset.synthetic);
    s.finish();
    if (cfg.dataset.kind != DatasetKind::synthetic && cfg.dataset.path.empty()) {
      errors.push_back("dataset.path: required for " + to_string(cfg.dataset.kind) + " datasets");
    }
  }
  {
    Section s = root.child("split");
    s.get_enum("mode", cfg.split.mode, parse_split_mode);
    s.get("train", cfg.split.ratios.train);
    s.get("val", cfg.split.ratios.val);
    s.get("test", cfg.split.ratios.test);
    s.finish();
    const auto& r = cfg.split.ratios;
    if (!(r.train > 0 && r.val > 0 && r.test > 0) || std::abs(r.train + r.val + r.test - 1.0) > 1e-9) {
      errors.push_back("split: ratios must be positive and sum to 1");
    }
  }
  {
    Section s = root.child("encoder");
    s.get_enum("kind", cfg.encoder.kind, parse_encoder_kind);
    s.get("time_dim", cfg.encoder.time_dim);
    s.get("output_dim", cfg.encoder.output_dim);
    s.get("attention_heads", cfg.encoder.attention_heads);
    s.get("layers", cfg.encoder.layers);
    s.get("neighbor_k", cfg.encoder.neighbor_k);
    s.get("time_gap", cfg.encoder.time_gap);
    s.finish();
    s.check([&] { cfg.encoder.validate(); });
  }
  {
    Section s = root.child("method");
    MethodSpec& m = cfg.method;
    s.get_enum("name", m.method, parse_method);
    s.get("alpha", m.alpha);
    s.get("beta", m.beta);
    s.get("gamma", m.curriculum.gamma);
    s.get_enum("curriculum", m.curriculum.strategy, parse_curriculum_strategy);
    s.get("cst_threshold", m.curriculum.cst_threshold);
    s.get("est_threshold", m.curriculum.est_threshold);
    s.get("em_iterations", m.em_iterations);
    s.get("epochs_per_step", m.epochs_per_step);
    s.get("warmup_epochs", m.warmup_epochs);
    s.get("patience", m.patience);
    s.get("em_patience", m.em_patience);
    s.get("learning_rate", m.learning_rate);
    s.get("batch_size", m.batch_size);
    s.get("npl_refresh_every", m.npl_refresh_every);
    s.get("warmup_validation_events", m.warmup_validation_events);
    s.finish();
  }
  {
    Section s = root.child("decoder");
    s.get("hidden_dim", cfg.method.decoder.hidden_dim);
    s.get("dropout", cfg.method.decoder.dropout);
    s.finish();
  }
  root.check([&] { cfg.method.validate(); });
  {
    Section s = root.child("sampler");
    s.get_enum("backend", cfg.sampler.backend, parse_backend);
    s.get("library", cfg.sampler.library_path);
    s.finish();
  }
  root.get("seeds", cfg.seeds);
  if (cfg.seeds.empty()) errors.push_back("seeds: at least one seed is required");
  root.get("output_dir", cfg.output_dir);
  root.finish();

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

Json to_json(const DriftConfig& d) {
  Json j;
  j["node_count"] = d.node_count;
  j["event_count"] = d.event_count;
  j["class_count"] = d.class_count;
  j["switch_probability"] = d.switch_probability;
  j["homophily"] = d.homophily;
  j["feature_noise"] = d.feature_noise;
  j["seed"] = d.seed;
  j["node_feature_dim"] = d.node_feature_dim;
  j["edge_feature_dim"] = d.edge_feature_dim;
  j["class_prior"] = d.class_prior;
  return j;
}

Json to_json(const RunConfig& c) {
  Json j;
  j["dataset"] = {{"kind", to_string(c.dataset.kind)},
                  {"path", c.dataset.path},
                  {"drop_dynamic_labels", c.dataset.drop_dynamic_labels},
                  {"synthetic", to_json(c.dataset.synthetic)}};
  j["split"] = {{"mode", to_string(c.split.mode)},
                {"train", c.split.ratios.train},
                {"val", c.split.ratios.val},
                {"test", c.split.ratios.test}};
  j["encoder"] = {{"kind", to_string(c.encoder.kind)},         {"time_dim", c.encoder.time_dim},
                  {"output_dim", c.encoder.output_dim},        {"attention_heads", c.encoder.attention_heads},
                  {"layers", c.encoder.layers},                {"neighbor_k", c.encoder.neighbor_k},
                  {"time_gap", c.encoder.time_gap}};
  const MethodSpec& m = c.method;
  j["method"] = {{"name", to_string(m.method)},
                 {"alpha", m.alpha},
                 {"beta", m.beta},
                 {"gamma", m.curriculum.gamma},
                 {"curriculum", to_string(m.curriculum.strategy)},
                 {"cst_threshold", m.curriculum.cst_threshold},
                 {"est_threshold", m.curriculum.est_threshold},
                 {"em_iterations", m.em_iterations},
                 {"epochs_per_step", m.epochs_per_step},
                 {"warmup_epochs", m.warmup_epochs},
                 {"patience", m.patience},
                 {"em_patience", m.em_patience},
                 {"learning_rate", m.learning_rate},
                 {"batch_size", m.batch_size},
                 {"npl_refresh_every", m.npl_refresh_every},
                 {"warmup_validation_events", m.warmup_validation_events}};
  j["decoder"] = {{"hidden_dim", m.decoder.hidden_dim}, {"dropout", m.decoder.dropout}};
  j["sampler"] = {{"backend", to_string(c.sampler.backend)}, {"library", c.sampler.library_path}};
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  return j;
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    value = text;
  }
  Json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!node->is_object()) throw std::invalid_argument("override path '" + key + "' crosses a non-object");
    node = &(*node)[path[i]];
    if (node->is_null()) *node = Json::object();
  }
  if (!node->is_object()) throw std::invalid_argument("override path '" + key + "' crosses a non-object");
  (*node)[path.back()] = std::move(value);
}

LabeledDataset load_dataset(const DatasetSource& source) {
  LabeledDataset data;
  switch (source.kind) {
    case DatasetKind::generic: data = load_dsub_like(source.path); break;
    case DatasetKind::jodie: data = load_jodie_csv(source.path); break;
    case DatasetKind::synthetic: data = generate_drift(source.synthetic); break;
  }
  if (source.drop_dynamic_labels) data.dynamic_labels.reset();
  return data;
}

DriftConfig drift_preset(const std::string& name) {
  DriftConfig d;
  if (name == "drift-default") return d;
  if (name == "drift-static") {
    d.switch_probability = 0.0;
    return d;
  }
  throw std::invalid_argument("unknown synthetic preset '" + name + "' (expected drift-default or drift-static)");
}

void save_checkpoint(const std::filesystem::path& path, const nn::ParameterSet& params, const Json& metadata) {
  Json doc;
  doc["format"] = "ptcl-checkpoint/1";
  doc["metadata"] = metadata;
  Json& tensors = doc["parameters"] = Json::object();
  for (const auto& p : params.items()) {
    const Matrix& m = p.var->value;
    tensors[p.name] = {{"shape", {m.rows(), m.cols()}},
                       {"data", std::vector<double>(m.data(), m.data() + m.size())}};
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << doc.dump() << "\n";
}

Json load_checkpoint(const std::filesystem::path& path, const nn::ParameterSet& params) {
  const Json doc = load_json_file(path);
  if (doc.value("format", "") != "ptcl-checkpoint/1") throw std::runtime_error(path.string() + ": not a checkpoint");
  const Json& tensors = doc.at("parameters");
  std::vector<Matrix> values;
  for (const auto& p : params.items()) {
    const auto it = tensors.find(p.name);
    if (it == tensors.end()) throw std::runtime_error(path.string() + ": missing parameter " + p.name);
    const auto rows = it->at("shape").at(0).get<Eigen::Index>();
    const auto cols = it->at("shape").at(1).get<Eigen::Index>();
    if (rows != p.var->value.rows() || cols != p.var->value.cols()) {
      throw std::runtime_error(path.string() + ": shape mismatch for " + p.name);
    }
    const auto data = it->at("data").get<std::vector<double>>();
    if (data.size() != static_cast<std::size_t>(rows * cols)) throw std::runtime_error(path.string() + ": truncated " + p.name);
    values.push_back(Eigen::Map<const Matrix>(data.data(), rows, cols));
  }
  params.restore(values);
  return doc.value("metadata", Json::object());
}

}  // namespace ptcl
