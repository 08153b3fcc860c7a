// Acceptance checks P1-P11. One line per criterion; exit status is nonzero
// when any gating criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "ptcl/config.hpp"
#include "ptcl/curriculum.hpp"
#include "ptcl/evaluation.hpp"
#include "test_util.hpp"

using namespace ptcl;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof buf, f, args);
  va_end(args);
  return buf;
}

bool bit_equal(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size() ||
        std::memcmp(a[i].data(), b[i].data(), sizeof(double) * static_cast<std::size_t>(a[i].size())) != 0) {
      return false;
    }
  }
  return true;
}

// ---- P1 ----

Outcome p1() {
  const double gammas[] = {0.01, 0.05, 0.1, 0.2, 0.4, 0.5, 0.6, 0.8, 0.9, 1.3};
  std::mt19937_64 rng(1);
  double worst = 0.0, worst_log = 0.0;
  std::size_t plateau = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::int64_t d = static_cast<std::int64_t>(rng() % 51);
    const std::int64_t tau = 1 + static_cast<std::int64_t>(rng() % 20);
    const double gamma = gammas[i % 10];
    const double excess = static_cast<double>(std::max<std::int64_t>(d - tau, 0));
    const double expected = d <= tau ? 1.0 : std::exp(-gamma * excess);
    const double w = temporal_weight(d, tau, gamma);
    worst = std::max(worst, std::abs(w - expected));
    worst_log = std::max(worst_log, std::abs(std::log(w) + gamma * excess));
    plateau += d <= tau ? 1 : 0;
  }
  return {worst <= 1e-12 && worst_log <= 1e-12,
          fmt("max |w - oracle| = %.1e, max log-linearity error = %.1e, %zu plateau cases of 1000", worst, worst_log,
              plateau)};
}

// ---- P2 ----

Outcome p2() {
  std::mt19937_64 rng(2);
  std::size_t checked = 0, wrong = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t len = 1 + rng() % 100;
    std::vector<Event> events;
    std::vector<double> times;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(rng() % 40);
      times.push_back(t);
      events.push_back(ptcl::testing::make_event(0, 1 + static_cast<NodeId>(rng() % 3), t));
    }
    const auto g = build_graph(events, Matrix::Zero(4, 1), 2, 1);
    for (double t : times) {
      std::int64_t later = 0;
      std::vector<double> seen;
      for (double s : times) {
        if (s > t && std::find(seen.begin(), seen.end(), s) == seen.end()) {
          seen.push_back(s);
          ++later;
        }
      }
      ++checked;
      wrong += temporal_distance(g, 0, t) == later ? 0 : 1;
    }
  }
  return {wrong == 0, fmt("%zu mismatches over %zu queries on 500 timelines", wrong, checked)};
}

// ---- shared toy setup for P3/P4 ----

struct Toy {
  LabeledDataset data = ptcl::testing::tiny_drift(0, 0.02);
  SplitSpec split = split_nodes(data.graph, data.final_labels, {}, 0, SplitMode::chronological);
  ReferenceSampler sampler{data.graph};
  TrainContext ctx{data, split, sampler};
  EncoderConfig enc;
  MethodSpec spec;

  Toy() {
    enc.time_dim = 4;
    enc.output_dim = 6;
    enc.layers = 1;
    enc.neighbor_k = 5;
    spec.learning_rate = 1e-2;
    spec.batch_size = 64;
    spec.epochs_per_step = 3;
    spec.patience = 3;
    spec.decoder.hidden_dim = 8;
  }

  PseudoLabelSet pseudo(const Model& m) const {
    return generate_pseudo_labels(data.graph, *m.encoder, *m.decoder, sampler, split_node_union(split),
                                  split.boundary_time, 1);
  }
};

// ---- P3 ----

Outcome p3() {
  Toy toy;
  Model m = make_model(toy.enc, toy.spec, toy.data);
  PseudoLabelSet pseudo = toy.pseudo(m);
  const auto enc_before = m.encoder->parameters().snapshot();
  const auto dec_before = m.decoder->parameters().snapshot();
  std::vector<double> a, b;
  EStepOptions o;
  o.pseudo = &pseudo;
  o.batch_losses = &a;
  e_step(toy.ctx, *m.encoder, *m.decoder, toy.spec, o);
  const bool encoder_same = bit_equal(enc_before, m.encoder->parameters().snapshot());

  std::mt19937_64 rng(3);
  std::vector<ClassId> labels;
  for (const auto& e : pseudo.entries) labels.push_back(e.label);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < labels.size(); ++i) pseudo.entries[i].label = labels[i];
  m.decoder->parameters().restore(dec_before);
  o.batch_losses = &b;
  e_step(toy.ctx, *m.encoder, *m.decoder, toy.spec, o);
  const bool losses_same = a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  return {encoder_same && losses_same,
          fmt("%zu batch losses %s after permuting %zu pseudo-labels; encoder %s", a.size(),
              losses_same ? "bit-identical" : "DIFFER", labels.size(), encoder_same ? "bit-identical" : "CHANGED")};
}

// ---- P4 ----

Outcome p4() {
  Toy toy;
  std::string detail;
  bool pass = true;

  {  // (a) SEM at alpha = 0 against PTCL, per batch.
    Model m = make_model(toy.enc, toy.spec, toy.data);
    const PseudoLabelSet pseudo = toy.pseudo(m);
    const auto dec0 = m.decoder->parameters().snapshot();
    MethodSpec sem = toy.spec;
    sem.method = Method::sem;
    std::vector<double> a, b;
    EStepOptions o;
    o.pseudo = &pseudo;
    o.batch_losses = &a;
    e_step(toy.ctx, *m.encoder, *m.decoder, toy.spec, o);
    m.decoder->parameters().restore(dec0);
    o.batch_losses = &b;
    e_step(toy.ctx, *m.encoder, *m.decoder, sem, o);
    double worst = a.size() == b.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    pass &= worst <= 1e-9;
    detail += fmt("(a) max batch diff %.1e over %zu", worst, a.size());
  }
  {  // (b) beta = 1 with replicated final labels against the replicated-label objective.
    Model m = make_model(toy.enc, toy.spec, toy.data);
    PseudoLabelSet replicated;
    for (const auto& e : replicated_final_entries(toy.ctx)) replicated.entries.push_back({e.node, e.time, e.label, 1.0});
    const auto m_batches = chronological_batches(m_step_entries(toy.ctx, replicated, 1.0), toy.spec.batch_size);
    const auto c_batches = chronological_batches(replicated_final_entries(toy.ctx), toy.spec.batch_size);
    double worst = m_batches.size() == c_batches.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(m_batches.size(), c_batches.size()); ++i) {
      ag::NoGradGuard guard;
      const double lm = label_loss(*m.encoder, *m.decoder, toy.ctx, m_batches[i], nullptr)->value(0, 0);
      const double lc = label_loss(*m.encoder, *m.decoder, toy.ctx, c_batches[i], nullptr)->value(0, 0);
      worst = std::max(worst, std::abs(lm - lc));
    }
    // The M-step's own first batch, before any update, is the same term.
    MethodSpec one = toy.spec;
    one.beta = 1.0;
    one.epochs_per_step = 1;
    std::vector<double> recorded;
    MStepOptions mo;
    mo.batch_losses = &recorded;
    double first_cft;
    {
      ag::NoGradGuard guard;
      first_cft = label_loss(*m.encoder, *m.decoder, toy.ctx, c_batches.front(), nullptr)->value(0, 0);
    }
    m_step(toy.ctx, *m.encoder, *m.decoder, replicated, one, mo);
    worst = std::max(worst, std::abs(recorded.front() - first_cft));
    pass &= worst <= 1e-6;
    detail += fmt("; (b) max batch diff %.1e over %zu", worst, m_batches.size());
  }
  {  // (c) beta = 0: encoder gradient does not see the pseudo-labels.
    Model m = make_model(toy.enc, toy.spec, toy.data);
    PseudoLabelSet first = toy.pseudo(m), second = first;
    std::mt19937_64 rng(4);
    for (auto& e : second.entries) e.label = static_cast<ClassId>(rng() % 2), e.weight = 0.5;
    const auto grads = [&](const PseudoLabelSet& p) {
      const auto batches = chronological_batches(m_step_entries(toy.ctx, p, 0.0), toy.spec.batch_size);
      nn::FreezeGuard freeze(m.decoder->parameters());
      std::vector<Matrix> out;
      m.encoder->parameters().zero_grad();
      for (const auto& batch : batches) ag::backward(label_loss(*m.encoder, *m.decoder, toy.ctx, batch, nullptr));
      for (const auto& item : m.encoder->parameters().items()) out.push_back(item.var->grad);
      m.encoder->parameters().zero_grad();
      return out;
    };
    const auto ga = grads(first), gb = grads(second);
    double worst = 0.0;
    for (std::size_t i = 0; i < ga.size(); ++i) {
      if (ga[i].size() != gb[i].size()) worst = INFINITY;
      else if (ga[i].size()) worst = std::max(worst, (ga[i] - gb[i]).cwiseAbs().maxCoeff());
    }
    pass &= worst < 1e-9;
    detail += fmt("; (c) max grad diff %.1e", worst);
  }
  return {pass, detail};
}

// ---- P5 ----

Outcome p5() {
  std::vector<Event> ev{ptcl::testing::make_event(0, 1, 1.0, {0.3, -0.7}),
                        ptcl::testing::make_event(1, 0, 2.5, {1.1, 0.4}),
                        ptcl::testing::make_event(0, 1, 4.0, {-0.5, 0.9})};
  const auto g = build_graph(ev, ptcl::testing::random_matrix(2, 3, 21), 2, 2);
  const ReferenceSampler sampler(g);
  std::string detail;
  bool pass = true;
  for (auto kind : {EncoderKind::tgat, EncoderKind::graphmixer}) {
    EncoderConfig c;
    c.kind = kind;
    c.time_dim = 4;
    c.output_dim = 4;
    c.attention_heads = 2;
    c.layers = 2;
    c.neighbor_k = 3;
    c.time_gap = 2;
    const auto enc = make_encoder(c, 3, 2, 5);
    const Decoder dec(4, 2, DecoderConfig{6, 0.0}, 6);
    const std::vector<NodeId> nodes{0, 1, 0};
    const std::vector<Timestamp> times{4.0, 2.5, 5.0};
    const std::vector<LabelEntry> entries{{0, 4.0, 0, 1.0}, {1, 2.5, 1, 1.0}, {0, 5.0, 1, 1.0}};
    auto params = enc->parameters().trainable();
    const auto dparams = dec.parameters().trainable();
    params.insert(params.end(), dparams.begin(), dparams.end());
    const double err = ptcl::testing::gradient_error(
        params, [&] { return label_loss(dec, enc->embed(g, sampler, nodes, times), entries, nullptr); });
    pass &= err < 1e-4;
    detail += fmt("%s%s rel err %.2e", detail.empty() ? "" : ", ", to_string(kind).c_str(), err);
  }
  return {pass, detail};
}

// ---- P6 ----

double consistency_oracle(const std::vector<ClassId>& s) {
  // Position of the last mismatch with the final label, counted from the front.
  std::size_t last_bad = 0;
  bool any = false;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (s[i] != s.back()) last_bad = i, any = true;
  }
  const std::size_t run = any ? s.size() - 2 - last_bad : s.size() - 1;
  return static_cast<double>(run) / static_cast<double>(s.size() - 1);
}

Outcome p6() {
  std::mt19937_64 rng(6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<ClassId> s(2 + rng() % 30);
    for (auto& c : s) c = static_cast<ClassId>(rng() % 3);
    if (i % 4 == 0) std::fill(s.begin() + static_cast<std::ptrdiff_t>(rng() % s.size()), s.end(), s.back());
    worst = std::max(worst, std::abs(consistency(s) - consistency_oracle(s)));
  }
  // Replicated final labels and flip-at-final sequences on the drift graph.
  const auto data = ptcl::testing::tiny_drift(0, 0.02);
  PseudoLabelSet replicated, flipped;
  std::vector<ClassId> finals = data.final_labels;
  for (NodeId u = 0; u < static_cast<NodeId>(data.graph.node_count()); ++u) {
    const auto tl = data.graph.timeline(u);
    for (std::size_t i = 0; i + 1 < tl.size(); ++i) {
      replicated.entries.push_back({u, tl[i], finals[u], 1.0});
      flipped.entries.push_back({u, tl[i], 1 - finals[u], 1.0});
    }
  }
  const auto cr = consistency_values(label_sequences(replicated, finals));
  const auto cf = consistency_values(label_sequences(flipped, finals));
  const bool ones = std::all_of(cr.begin(), cr.end(), [](double c) { return c == 1.0; });
  const bool zeros = std::all_of(cf.begin(), cf.end(), [](double c) { return c == 0.0; });
  return {worst == 0.0 && ones && zeros && !cr.empty(),
          fmt("oracle max diff %.1e on 1000 sequences; replicated C=1 on %zu/%zu, flip-at-final C=0 on %zu/%zu", worst,
              static_cast<std::size_t>(std::count(cr.begin(), cr.end(), 1.0)), cr.size(),
              static_cast<std::size_t>(std::count(cf.begin(), cf.end(), 0.0)), cf.size())};
}

// ---- P10 ----

Outcome p10() {
  std::mt19937_64 rng(10);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? static_cast<double>(rng() % 10) : std::uniform_real_distribution<double>()(rng);
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 0, y[1] = 1;
    double hits = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (y[i] == 1 && y[j] == 0) pairs += 1, hits += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
    worst = std::max(worst, std::abs(auc(s, y) - hits / pairs));
  }
  return {worst <= 1e-12, fmt("max |auc - pairwise oracle| = %.1e over 200 vectors", worst)};
}

// ---- synthetic runs for P7-P9 ----

EncoderConfig desk_encoder() {
  EncoderConfig c;
  c.kind = EncoderKind::tgat;
  c.time_dim = 8;
  c.output_dim = 16;
  c.attention_heads = 2;
  c.layers = 1;
  c.neighbor_k = 10;
  c.time_gap = 10;
  return c;
}

MethodSpec desk_spec(std::uint64_t seed) {
  MethodSpec s;
  s.seed = seed;
  s.learning_rate = 1e-3;
  s.batch_size = 200;
  s.warmup_epochs = 3;
  s.epochs_per_step = 10;
  s.patience = 3;
  s.em_iterations = 10;
  s.em_patience = 2;
  s.beta = 0.5;
  s.curriculum.gamma = 0.5;
  return s;
}

struct SeedRuns {
  double cft_test = 0, ptcl_test = 0, naive_test = 0;
  double cft_val = 0, ptcl_val = 0;
  std::size_t best_tau = 0;
  double cft_phase_seconds = 0, ptcl_iteration_seconds = 0;
  double ptcl_agreement = 0, replicated_agreement = 0;
};

std::vector<Matrix> warm_encoder(const TrainContext& ctx, const MethodSpec& spec) {
  Model m = make_model(desk_encoder(), spec, ctx.data);
  warmup(ctx, *m.encoder, spec);
  return m.encoder->parameters().snapshot();
}

double replicated_agreement(const PseudoLabelSet& index, const LabeledDataset& data, const std::vector<NodeId>& nodes) {
  PseudoLabelSet rep = index;
  for (auto& e : rep.entries) e.label = data.final_labels[e.node];
  return pseudo_label_agreement(rep, data, nodes);
}

SeedRuns run_seed(const LabeledDataset& data, std::uint64_t seed, bool with_baselines) {
  const SplitSpec split = split_nodes(data.graph, data.final_labels, {}, seed, SplitMode::chronological);
  const ReferenceSampler sampler(data.graph);
  const TrainContext ctx{data, split, sampler};
  const MethodSpec spec = desk_spec(seed);
  const auto warm = warm_encoder(ctx, spec);
  SeedRuns out;

  const RunResult ptcl = run_method(ctx, desk_encoder(), spec, &warm);
  out.ptcl_test = ptcl.test_metric;
  out.ptcl_val = ptcl.val_metric;
  out.best_tau = ptcl.history.best_iteration;
  double iter_seconds = 0;
  std::size_t iters = 0;
  for (const auto& it : ptcl.history.iterations) {
    if (it.tau > 0) iter_seconds += it.seconds, ++iters;
  }
  out.ptcl_iteration_seconds = iters ? iter_seconds / static_cast<double>(iters) : 0.0;
  out.ptcl_agreement = pseudo_label_agreement(ptcl.last_pseudo_labels, data, split.train_nodes);
  out.replicated_agreement = replicated_agreement(ptcl.last_pseudo_labels, data, split.train_nodes);
  if (!with_baselines) return out;

  MethodSpec cft = spec;
  cft.method = Method::cft;
  const RunResult c = run_method(ctx, desk_encoder(), cft, &warm);
  out.cft_test = c.test_metric;
  out.cft_val = c.val_metric;
  out.cft_phase_seconds = c.history.phase_seconds.at("cft");

  MethodSpec naive = spec;
  naive.curriculum.strategy = CurriculumStrategy::naive;
  out.naive_test = run_method(ctx, desk_encoder(), naive, &warm).test_metric;
  return out;
}

double mean_of(const std::vector<SeedRuns>& runs, double SeedRuns::*field) {
  double s = 0;
  for (const auto& r : runs) s += r.*field;
  return s / static_cast<double>(runs.size());
}

std::vector<SeedRuns> drift_runs;
double drift_seconds = 0;

void ensure_drift_runs() {
  if (!drift_runs.empty()) return;
  const auto start = Clock::now();
  const LabeledDataset data = generate_drift(DriftConfig{});
  for (std::uint64_t seed = 0; seed < 5; ++seed) drift_runs.push_back(run_seed(data, seed, true));
  drift_seconds = seconds_since(start);
}

Outcome p7() {
  ensure_drift_runs();
  const double cft = mean_of(drift_runs, &SeedRuns::cft_test), ptcl = mean_of(drift_runs, &SeedRuns::ptcl_test),
               naive = mean_of(drift_runs, &SeedRuns::naive_test);
  const double gap_cft = 100 * (ptcl - cft), gap_naive = 100 * (ptcl - naive);
  const bool pass = gap_cft >= 2.0 && gap_naive >= 0.5 && drift_seconds < 900;
  return {pass, fmt("test AUC ptcl %.2f, cft %.2f, naive %.2f; gaps %+.2f (need >= 2.0) and %+.2f (need >= 0.5); "
                    "val ptcl %.2f vs cft %.2f; %.0fs",
                    100 * ptcl, 100 * cft, 100 * naive, gap_cft, gap_naive, 100 * mean_of(drift_runs, &SeedRuns::ptcl_val),
                    100 * mean_of(drift_runs, &SeedRuns::cft_val), drift_seconds)};
}

Outcome p8() {
  ensure_drift_runs();
  std::size_t worst_tau = 0;
  double lo = INFINITY, hi = 0;
  for (const auto& r : drift_runs) {
    worst_tau = std::max(worst_tau, r.best_tau);
    const double ratio = r.ptcl_iteration_seconds / r.cft_phase_seconds;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  const double ratio = mean_of(drift_runs, &SeedRuns::ptcl_iteration_seconds) / mean_of(drift_runs, &SeedRuns::cft_phase_seconds);
  std::string taus;
  for (const auto& r : drift_runs) taus += (taus.empty() ? "" : ",") + std::to_string(r.best_tau);
  return {worst_tau <= 10 && ratio >= 0.5 && ratio <= 2.0,
          fmt("best tau per seed {%s}; iteration/cft-phase time ratio %.2f (per seed %.2f-%.2f)", taus.c_str(), ratio, lo,
              hi)};
}

Outcome p9() {
  ensure_drift_runs();
  const auto start = Clock::now();
  DriftConfig cfg;
  cfg.switch_probability = 0.0;
  const LabeledDataset data = generate_drift(cfg);
  double worst_static = 1.0;
  std::string per_seed;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SeedRuns r = run_seed(data, seed, false);
    worst_static = std::min(worst_static, r.ptcl_agreement);
    per_seed += fmt("%s%.3f", per_seed.empty() ? "" : ",", r.ptcl_agreement);
  }
  const double seconds = seconds_since(start);
  const double drift_ptcl = mean_of(drift_runs, &SeedRuns::ptcl_agreement);
  const double drift_rep = mean_of(drift_runs, &SeedRuns::replicated_agreement);
  return {worst_static >= 0.9 && drift_ptcl > drift_rep && seconds < 900,
          fmt("static agreement per seed {%s}; drift agreement ptcl %.4f vs replicated %.4f; %.0fs", per_seed.c_str(),
              drift_ptcl, drift_rep, seconds)};
}

Outcome p11(bool& skipped) {
  const char* path = std::getenv("PTCL_WIKIPEDIA_CSV");
  if (path == nullptr || *path == '\0') {
    skipped = true;
    return {true, "PTCL_WIKIPEDIA_CSV not set"};
  }
  const LabeledDataset data = load_jodie_csv(path);
  const SplitSpec split = split_nodes(data.graph, data.final_labels, {}, 0, SplitMode::chronological);
  const ReferenceSampler sampler(data.graph);
  const TrainContext ctx{data, split, sampler};
  MethodSpec spec;
  spec.beta = 0.9;
  spec.curriculum.gamma = 0.8;
  if (const char* e = std::getenv("PTCL_WIKIPEDIA_EPOCHS")) spec.epochs_per_step = spec.warmup_epochs = std::stoul(e);
  const RunResult r = run_method(ctx, EncoderConfig{}, spec);
  return {100 * r.test_metric >= 81.0, fmt("test AUC %.2f (need >= 81.0)", 100 * r.test_metric)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    std::function<Outcome()> run;
    double limit_seconds;
  };
  bool p11_skipped = false;
  const std::vector<Criterion> criteria{
      {"P1", "curriculum weight formula", p1, 1},
      {"P2", "temporal distance oracle", p2, 1},
      {"P3", "E-step isolation", p3, 30},
      {"P4", "objective degeneracies", p4, 60},
      {"P5", "encoder gradients", p5, 60},
      {"P6", "consistency oracle", p6, 1},
      {"P7", "synthetic superiority", p7, 0},
      {"P8", "convergence shape", p8, 0},
      {"P9", "pseudo-label agreement", p9, 0},
      {"P10", "AUC oracle", p10, 1},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = seconds_since(start);
    if (c.limit_seconds > 0 && s >= c.limit_seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0fs limit", c.limit_seconds);
    }
    failures += o.pass ? 0 : 1;
    std::printf("%-4s %s  %-26s %s (%.2fs)\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), s);
    std::fflush(stdout);
  }
  const auto start = Clock::now();
  Outcome o;
  try {
    o = p11(p11_skipped);
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%-4s %s  %-26s %s (%.2fs, optional)\n", "P11", p11_skipped ? "SKIP" : o.pass ? "PASS" : "FAIL",
              "wikipedia reference run", o.detail.c_str(), seconds_since(start));
  std::printf("%d gating criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
