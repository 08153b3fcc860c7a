#include "ptcl/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string_view>
#include <unordered_map>

namespace ptcl {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) field.remove_suffix(1);
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw DatasetError("cannot open " + path.string());
  }

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DatasetError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  template <class T>
  T number(std::string_view field, const char* what) const {
    T value{};
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) fail(std::string("malformed ") + what + " '" + std::string(field) + "'");
    return value;
  }

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::size_t line_no_ = 0;
};

void finalize_labels(LabeledDataset& data) {
  const std::size_t n = data.graph.node_count();
  if (data.eval_mask.empty()) {
    data.eval_mask.resize(n);
    for (std::size_t u = 0; u < n; ++u) data.eval_mask[u] = data.final_labels[u] != kUnlabeled;
  }
  if (!data.dynamic_labels) return;
  for (std::size_t u = 0; u < n; ++u) {
    if (data.final_labels[u] == kUnlabeled || !data.graph.has_events(static_cast<NodeId>(u))) continue;
    const auto at_final = data.dynamic_label(static_cast<NodeId>(u), data.graph.final_timestamp(static_cast<NodeId>(u)));
    if (at_final && *at_final != data.final_labels[u]) {
      throw DatasetError("final label of node " + std::to_string(u) + " disagrees with its dynamic label at T_u");
    }
  }
}

std::FILE* open_for_write(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw DatasetError("cannot write " + path.string());
  return f;
}

void close_checked(std::FILE* f, const std::filesystem::path& path) {
  if (std::fclose(f) != 0) throw DatasetError("failed writing " + path.string());
}

}  // namespace

std::size_t LabeledDataset::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(final_labels.begin(), final_labels.end(),
                                                [](ClassId c) { return c != kUnlabeled; }));
}

std::optional<ClassId> LabeledDataset::dynamic_label(NodeId u, Timestamp t) const {
  if (!dynamic_labels) return std::nullopt;
  const auto it = dynamic_labels->find({u, t});
  if (it == dynamic_labels->end()) return std::nullopt;
  return it->second;
}

LabeledDataset load_jodie_csv(const std::filesystem::path& path) {
  LineReader reader(path);
  std::string line;
  if (!reader.next(line)) reader.fail("empty file");
  struct Row {
    std::int64_t user, item;
    double t;
    ClassId label;
    std::vector<double> features;
  };
  std::vector<Row> rows;
  std::size_t arity = 0;
  bool first = true;
  while (reader.next(line)) {
    const auto fields = split_fields(line);
    if (fields.size() < 4) reader.fail("expected user_id,item_id,timestamp,state_label[,features]");
    Row row;
    row.user = reader.number<std::int64_t>(fields[0], "user_id");
    row.item = reader.number<std::int64_t>(fields[1], "item_id");
    row.t = reader.number<double>(fields[2], "timestamp");
    row.label = reader.number<ClassId>(fields[3], "state_label");
    if (row.label < 0) reader.fail("negative state_label");
    if (first) {
      arity = fields.size() - 4;
      first = false;
    } else if (fields.size() - 4 != arity) {
      reader.fail("expected " + std::to_string(arity) + " feature columns, found " + std::to_string(fields.size() - 4));
    }
    row.features.reserve(arity);
    for (std::size_t j = 4; j < fields.size(); ++j) row.features.push_back(reader.number<double>(fields[j], "feature"));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) reader.fail("no interaction rows");

  std::vector<std::int64_t> users, items;
  for (const Row& r : rows) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  std::sort(users.begin(), users.end());
  users.erase(std::unique(users.begin(), users.end()), users.end());
  std::sort(items.begin(), items.end());
  items.erase(std::unique(items.begin(), items.end()), items.end());
  const auto dense = [](const std::vector<std::int64_t>& ids, std::int64_t id) {
    return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
  };
  const auto user_count = static_cast<NodeId>(users.size());
  const std::size_t node_count = users.size() + items.size();

  ClassId max_label = 0;
  std::vector<Event> events;
  events.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Event e;
    e.source = dense(users, rows[i].user);
    e.destination = user_count + dense(items, rows[i].item);
    e.timestamp = rows[i].t;
    e.edge_features = std::move(rows[i].features);
    e.event_index = static_cast<std::int64_t>(i);
    max_label = std::max(max_label, rows[i].label);
    events.push_back(std::move(e));
  }

  LabeledDataset data;
  data.name = path.stem().string();
  data.bipartite = true;
  const std::size_t class_count = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  // Non-attributed nodes get zero features of the conventional width.
  data.graph = build_graph(std::move(events), Matrix::Zero(static_cast<Eigen::Index>(node_count), 172), class_count, arity);
  data.final_labels.assign(node_count, kUnlabeled);
  DynamicLabels dyn;
  // Later rows at the same (user, t) win, matching the stream order.
  for (const Row& r : rows) dyn[{dense(users, r.user), r.t}] = r.label;
  for (NodeId u = 0; u < user_count; ++u) {
    data.final_labels[static_cast<std::size_t>(u)] = dyn.at({u, data.graph.final_timestamp(u)});
  }
  data.dynamic_labels = std::move(dyn);
  finalize_labels(data);
  return data;
}

LabeledDataset load_dsub_like(const std::filesystem::path& dir) {
  // nodes.csv defines the node set and its dense numbering.
  std::unordered_map<std::int64_t, NodeId> ids;
  std::vector<std::vector<double>> node_rows;
  std::size_t node_dim = 0;
  {
    LineReader reader(dir / "nodes.csv");
    std::string line;
    if (!reader.next(line)) reader.fail("empty file");
    bool first = true;
    while (reader.next(line)) {
      const auto fields = split_fields(line);
      const auto raw = reader.number<std::int64_t>(fields[0], "node id");
      if (first) {
        node_dim = fields.size() - 1;
        first = false;
      } else if (fields.size() - 1 != node_dim) {
        reader.fail("inconsistent node feature arity");
      }
      if (!ids.emplace(raw, static_cast<NodeId>(node_rows.size())).second) reader.fail("duplicate node id");
      std::vector<double> f;
      for (std::size_t j = 1; j < fields.size(); ++j) f.push_back(reader.number<double>(fields[j], "feature"));
      node_rows.push_back(std::move(f));
    }
    if (node_rows.empty()) reader.fail("no nodes");
  }
  const auto lookup = [&](const LineReader& reader, std::string_view field) {
    const auto raw = reader.number<std::int64_t>(field, "node id");
    const auto it = ids.find(raw);
    if (it == ids.end()) reader.fail("reference to unknown node id " + std::to_string(raw));
    return it->second;
  };

  std::vector<Event> events;
  std::size_t edge_dim = 0;
  {
    LineReader reader(dir / "edges.csv");
    std::string line;
    if (!reader.next(line)) reader.fail("empty file");
    bool first = true;
    while (reader.next(line)) {
      const auto fields = split_fields(line);
      if (fields.size() < 3) reader.fail("expected src,dst,t[,features]");
      if (first) {
        edge_dim = fields.size() - 3;
        first = false;
      } else if (fields.size() - 3 != edge_dim) {
        reader.fail("inconsistent edge feature arity");
      }
      Event e;
      e.source = lookup(reader, fields[0]);
      e.destination = lookup(reader, fields[1]);
      e.timestamp = reader.number<double>(fields[2], "timestamp");
      for (std::size_t j = 3; j < fields.size(); ++j) e.edge_features.push_back(reader.number<double>(fields[j], "feature"));
      e.event_index = static_cast<std::int64_t>(events.size());
      events.push_back(std::move(e));
    }
  }

  std::vector<ClassId> final_labels(node_rows.size(), kUnlabeled);
  DynamicLabels dyn;
  ClassId max_label = 0;
  {
    LineReader reader(dir / "labels.csv");
    std::string line;
    if (!reader.next(line)) reader.fail("empty file");
    while (reader.next(line)) {
      const auto fields = split_fields(line);
      if (fields.size() != 2 && fields.size() != 3) reader.fail("expected id,label[,t]");
      const NodeId u = lookup(reader, fields[0]);
      const auto label = reader.number<ClassId>(fields[1], "label");
      if (label < 0) reader.fail("negative label");
      max_label = std::max(max_label, label);
      if (fields.size() == 3 && !fields[2].empty()) {
        dyn[{u, reader.number<double>(fields[2], "timestamp")}] = label;
      } else {
        final_labels[static_cast<std::size_t>(u)] = label;
      }
    }
  }

  Matrix features(static_cast<Eigen::Index>(node_rows.size()), static_cast<Eigen::Index>(node_dim));
  for (std::size_t i = 0; i < node_rows.size(); ++i) {
    for (std::size_t j = 0; j < node_dim; ++j) features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node_rows[i][j];
  }
  LabeledDataset data;
  data.name = dir.filename().string();
  if (data.name.empty()) data.name = dir.parent_path().filename().string();
  const std::size_t class_count = std::max<std::size_t>(2, static_cast<std::size_t>(max_label) + 1);
  data.graph = build_graph(std::move(events), std::move(features), class_count, edge_dim);
  for (const auto& [key, label] : dyn) {
    const auto timeline = data.graph.timeline(key.first);
    if (!std::binary_search(timeline.begin(), timeline.end(), key.second)) {
      throw DatasetError("dynamic label for node " + std::to_string(key.first) + " at a time outside its timeline");
    }
  }
  for (std::size_t u = 0; u < final_labels.size(); ++u) {
    if (final_labels[u] != kUnlabeled || !data.graph.has_events(static_cast<NodeId>(u))) continue;
    const auto it = dyn.find({static_cast<NodeId>(u), data.graph.final_timestamp(static_cast<NodeId>(u))});
    if (it != dyn.end()) final_labels[u] = it->second;
  }
  data.final_labels = std::move(final_labels);
  if (!dyn.empty()) data.dynamic_labels = std::move(dyn);
  finalize_labels(data);
  return data;
}

void save_generic(const LabeledDataset& data, const std::filesystem::path& dir, bool include_dynamic_labels) {
  std::filesystem::create_directories(dir);
  const DynamicGraph& g = data.graph;
  {
    const auto path = dir / "nodes.csv";
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "id");
    for (std::size_t j = 0; j < g.node_feature_dim(); ++j) std::fprintf(f, ",f%zu", j);
    std::fprintf(f, "\n");
    for (std::size_t u = 0; u < g.node_count(); ++u) {
      std::fprintf(f, "%zu", u);
      for (std::size_t j = 0; j < g.node_feature_dim(); ++j) {
        std::fprintf(f, ",%.17g", g.node_features()(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(j)));
      }
      std::fprintf(f, "\n");
    }
    close_checked(f, path);
  }
  {
    const auto path = dir / "edges.csv";
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "src,dst,t");
    for (std::size_t j = 0; j < g.edge_feature_dim(); ++j) std::fprintf(f, ",f%zu", j);
    std::fprintf(f, "\n");
    for (std::size_t e = 0; e < g.event_count(); ++e) {
      std::fprintf(f, "%" PRId64 ",%" PRId64 ",%.17g", g.source(e), g.destination(e), g.timestamp(e));
      for (std::size_t j = 0; j < g.edge_feature_dim(); ++j) {
        std::fprintf(f, ",%.17g", g.edge_features()(static_cast<Eigen::Index>(e), static_cast<Eigen::Index>(j)));
      }
      std::fprintf(f, "\n");
    }
    close_checked(f, path);
  }
  {
    const auto path = dir / "labels.csv";
    std::FILE* f = open_for_write(path);
    std::fprintf(f, "id,label,t\n");
    for (std::size_t u = 0; u < data.final_labels.size(); ++u) {
      if (data.final_labels[u] != kUnlabeled) std::fprintf(f, "%zu,%d,\n", u, data.final_labels[u]);
    }
    if (include_dynamic_labels && data.dynamic_labels) {
      for (const auto& [key, label] : *data.dynamic_labels) {
        std::fprintf(f, "%" PRId64 ",%d,%.17g\n", key.first, label, key.second);
      }
    }
    close_checked(f, path);
  }
}

void DriftConfig::validate() const {
  if (node_count < 2 || event_count == 0) throw std::invalid_argument("drift config needs >= 2 nodes and >= 1 event");
  if (class_count < 2) throw std::invalid_argument("drift config needs at least two classes");
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(switch_probability) || !prob(homophily)) throw std::invalid_argument("drift probabilities must be in [0, 1]");
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) throw std::invalid_argument("feature_noise must be >= 0");
  if (!class_prior.empty()) {
    if (class_prior.size() != class_count) throw std::invalid_argument("class_prior needs one entry per class");
    double total = 0.0;
    for (double p : class_prior) {
      if (!(p >= 0.0)) throw std::invalid_argument("class_prior entries must be non-negative");
      total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("class_prior must have positive mass");
  }
}

RowVector class_centroid(std::size_t c, std::size_t class_count, std::size_t dim) {
  RowVector v = RowVector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t j = c % class_count; j < dim; j += class_count) v(static_cast<Eigen::Index>(j)) = 1.0;
  return v;
}

LabeledDataset generate_drift(const DriftConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  const std::size_t n = config.node_count;
  const std::size_t classes = config.class_count;

  std::vector<double> prior = config.class_prior;
  if (prior.empty()) prior.assign(classes, 1.0);
  std::discrete_distribution<std::size_t> initial(prior.begin(), prior.end());

  // Class membership with O(1) moves: members[c] holds nodes, slot[u] their position.
  std::vector<std::size_t> latent(n);
  std::vector<std::vector<NodeId>> members(classes);
  std::vector<std::size_t> slot(n);
  for (std::size_t u = 0; u < n; ++u) {
    latent[u] = initial(rng);
    slot[u] = members[latent[u]].size();
    members[latent[u]].push_back(static_cast<NodeId>(u));
  }
  const auto move_node = [&](std::size_t u, std::size_t to) {
    auto& from = members[latent[u]];
    const NodeId last = from.back();
    from[slot[u]] = last;
    slot[static_cast<std::size_t>(last)] = slot[u];
    from.pop_back();
    latent[u] = to;
    slot[u] = members[to].size();
    members[to].push_back(static_cast<NodeId>(u));
  };

  std::normal_distribution<double> noise(0.0, 1.0);
  const auto noisy = [&](RowVector v) {
    for (Eigen::Index j = 0; j < v.size(); ++j) v(j) += config.feature_noise * noise(rng);
    return v;
  };

  Matrix node_features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(config.node_feature_dim));
  for (std::size_t u = 0; u < n; ++u) {
    node_features.row(static_cast<Eigen::Index>(u)) = noisy(class_centroid(latent[u], classes, config.node_feature_dim));
  }

  std::uniform_int_distribution<std::size_t> pick_node(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_other_class(1, classes - 1);
  std::bernoulli_distribution flip(config.switch_probability);
  std::bernoulli_distribution same(config.homophily);

  std::vector<Event> events;
  events.reserve(config.event_count);
  DynamicLabels dyn;
  for (std::size_t e = 0; e < config.event_count; ++e) {
    const std::size_t u = pick_node(rng);
    if (flip(rng)) move_node(u, (latent[u] + pick_other_class(rng)) % classes);

    // Candidate pool: same-class nodes other than u, or nodes of other classes.
    const bool want_same = same(rng);
    NodeId v = static_cast<NodeId>(u);
    const auto& own = members[latent[u]];
    const std::size_t others = n - own.size();
    if (want_same && own.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick(0, own.size() - 2);
      std::size_t idx = pick(rng);
      if (idx >= slot[u]) ++idx;
      v = own[idx];
    } else if (!want_same && others > 0) {
      std::uniform_int_distribution<std::size_t> pick(0, others - 1);
      std::size_t idx = pick(rng);
      for (std::size_t c = 0; c < classes; ++c) {
        if (c == latent[u]) continue;
        if (idx < members[c].size()) {
          v = members[c][idx];
          break;
        }
        idx -= members[c].size();
      }
    } else {
      while (v == static_cast<NodeId>(u)) v = static_cast<NodeId>(pick_node(rng));
    }

    Event ev;
    ev.source = static_cast<NodeId>(u);
    ev.destination = v;
    ev.timestamp = static_cast<double>(e + 1);
    const RowVector f = noisy(class_centroid(latent[u], classes, config.edge_feature_dim));
    ev.edge_features.assign(f.data(), f.data() + f.size());
    ev.event_index = static_cast<std::int64_t>(e);
    dyn[{ev.source, ev.timestamp}] = static_cast<ClassId>(latent[u]);
    dyn[{ev.destination, ev.timestamp}] = static_cast<ClassId>(latent[static_cast<std::size_t>(v)]);
    events.push_back(std::move(ev));
  }

  LabeledDataset data;
  data.name = "drift";
  data.graph = build_graph(std::move(events), std::move(node_features), classes, config.edge_feature_dim);
  data.final_labels.assign(n, kUnlabeled);
  for (std::size_t u = 0; u < n; ++u) {
    const auto node = static_cast<NodeId>(u);
    if (data.graph.has_events(node)) data.final_labels[u] = dyn.at({node, data.graph.final_timestamp(node)});
  }
  data.dynamic_labels = std::move(dyn);
  finalize_labels(data);
  return data;
}

std::size_t count_label_switches(const LabeledDataset& data) {
  if (!data.dynamic_labels) return 0;
  std::size_t switches = 0;
  NodeId prev_node = -1;
  ClassId prev_label = kUnlabeled;
  for (const auto& [key, label] : *data.dynamic_labels) {
    if (key.first == prev_node && label != prev_label) ++switches;
    prev_node = key.first;
    prev_label = label;
  }
  return switches;
}

}  // namespace ptcl
