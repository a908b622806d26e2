#include "reid/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "reid/losses.hpp"
#include "reid/mining.hpp"
#include "reid/model.hpp"
#include "reid/train.hpp"

namespace reid {

namespace {

constexpr double kStep = 1e-5;
constexpr double kKink = 1e-4;
// Cases whose whole gradient is smaller than this have no active loss terms and are redrawn.
constexpr double kInactive = 1e-6;

double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::sqrt(std::max(na, nn));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

// Central differences of f with respect to every entry of `values`.
std::vector<double> numeric_grad(std::span<double> values, const std::function<double()>& f) {
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + kStep;
    const double up = f();
    values[i] = saved - kStep;
    const double down = f();
    values[i] = saved;
    out[i] = (up - down) / (2.0 * kStep);
  }
  return out;
}

Vector random_vector(std::size_t dim, double scale, RngStream& rng) {
  Vector v(dim);
  for (double& x : v) x = rng.uniform(-scale, scale);
  return v;
}

double check_contrastive(RngStream& rng) {
  const LossConfig cfg;
  while (true) {
    Vector e1 = random_vector(8, 0.4, rng);
    Vector e2 = random_vector(8, 0.4, rng);
    const bool same = rng.bernoulli(0.5);
    const double d = euclidean_distance(e1, e2);
    if (!same && (std::abs(cfg.margin - d) < kKink || d < kKink)) continue;
    const PairGrad g = contrastive_grad(e1, e2, same, cfg);
    auto loss = [&] { return contrastive_loss(e1, e2, same, cfg); };
    const auto n1 = numeric_grad(e1.values(), loss);
    const auto n2 = numeric_grad(e2.values(), loss);
    std::vector<double> analytic(g.first.begin(), g.first.end());
    analytic.insert(analytic.end(), g.second.begin(), g.second.end());
    std::vector<double> numeric(n1);
    numeric.insert(numeric.end(), n2.begin(), n2.end());
    return relative_error(analytic, numeric);
  }
}

double check_triplet(RngStream& rng, bool squared) {
  LossConfig cfg;
  cfg.squared_distances = squared;
  while (true) {
    Vector a = random_vector(8, 0.4, rng);
    Vector p = random_vector(8, 0.4, rng);
    Vector n = random_vector(8, 0.4, rng);
    const double inner = triplet_distance(a, p, cfg) - triplet_distance(a, n, cfg) + cfg.margin;
    if (std::abs(inner) < kKink) continue;
    if (!squared && (euclidean_distance(a, p) < kKink || euclidean_distance(a, n) < kKink)) continue;
    const TripletGrad g = triplet_grad(a, p, n, cfg);
    auto loss = [&] { return triplet_loss(a, p, n, cfg); };
    std::vector<double> analytic;
    std::vector<double> numeric;
    for (auto [vec, grad] : {std::pair{&a, &g.anchor}, std::pair{&p, &g.positive}, std::pair{&n, &g.negative}}) {
      const auto num = numeric_grad(vec->values(), loss);
      numeric.insert(numeric.end(), num.begin(), num.end());
      analytic.insert(analytic.end(), grad->begin(), grad->end());
    }
    return relative_error(analytic, numeric);
  }
}

bool near_kink(const EmbeddingNet& net, const std::vector<Vector>& inputs) {
  for (const auto& x : inputs) {
    const ForwardResult fr = net.forward(x);
    for (std::size_t l = 0; l + 1 < fr.trace.pre_activations.size(); ++l) {
      for (double z : fr.trace.pre_activations[l]) {
        if (std::abs(z) < kKink) return true;
      }
    }
  }
  return false;
}

double check_network(RngStream& rng, LossKind kind) {
  const LossConfig cfg;
  while (true) {
    const std::size_t in = 4 + rng.uniform_index(5);
    const std::size_t hidden = 4 + rng.uniform_index(8);
    const std::size_t out = 3 + rng.uniform_index(4);
    EmbeddingNet net = EmbeddingNet::init({in, hidden, out}, rng, rng.bernoulli(0.5));
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      for (double& b : net.bias(l).values()) b = rng.uniform(-0.1, 0.1);
    }
    std::vector<Vector> inputs;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < 8; ++i) {
      inputs.push_back(random_vector(in, 1.0, rng));
      labels.push_back(static_cast<Label>(i % 3));
    }
    if (near_kink(net, inputs)) continue;

    std::vector<Vector> embeddings;
    std::vector<ForwardTrace> traces;
    for (const auto& x : inputs) {
      ForwardResult fr = net.forward(x);
      embeddings.push_back(std::move(fr.embedding));
      traces.push_back(std::move(fr.trace));
    }
    const LabeledBatch batch{embeddings, labels};
    std::vector<Pair> pairs;
    std::vector<Triplet> triplets;
    bool kinked = false;
    if (kind == LossKind::siamese) {
      pairs = sample_pairs(batch, rng);
      for (const auto& pr : pairs) {
        const double d = euclidean_distance(embeddings[pr.first], embeddings[pr.second]);
        kinked = kinked || (!pr.same && (std::abs(cfg.margin - d) < kKink || d < kKink));
      }
    } else {
      triplets = mine_semi_hard_triplets(batch, cfg, rng);
      for (const auto& t : triplets) {
        const double inner = triplet_distance(embeddings[t.anchor], embeddings[t.positive], cfg) -
                             triplet_distance(embeddings[t.anchor], embeddings[t.negative], cfg) + cfg.margin;
        kinked = kinked || std::abs(inner) < kKink;
      }
    }
    if (kinked) continue;

    auto objective = [&](std::span<const Vector> e) {
      return kind == LossKind::siamese ? pair_objective(e, pairs, cfg) : triplet_objective(e, triplets, cfg);
    };
    const BatchLoss base = objective(embeddings);
    const ParamGrads analytic = backprop_batch(net, traces, base.embedding_grads);
    auto composed = [&] {
      std::vector<Vector> e;
      for (const auto& x : inputs) e.push_back(net.embed(x));
      return objective(e).loss;
    };

    std::vector<double> all_analytic;
    std::vector<double> all_numeric;
    auto params = net.parameters();
    const auto views = analytic.views();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto numeric = numeric_grad(params[i].values, composed);
      all_numeric.insert(all_numeric.end(), numeric.begin(), numeric.end());
      all_analytic.insert(all_analytic.end(), views[i].begin(), views[i].end());
    }
    if (norm(all_analytic) < kInactive) continue;
    return relative_error(all_analytic, all_numeric);
  }
}

}  // namespace

double GradcheckReport::max_relative_error() const {
  return std::max({contrastive.max_relative_error, triplet.max_relative_error,
                   network_siamese.max_relative_error, network_triplet.max_relative_error});
}

GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t cases_per_suite) {
  const RngStream root(seed);
  GradcheckReport report;
  auto run = [&](GradcheckSuite& suite, std::uint64_t stream, auto&& one_case) {
    RngStream rng = root.derive(stream);
    for (std::size_t c = 0; c < cases_per_suite; ++c) {
      suite.max_relative_error = std::max(suite.max_relative_error, one_case(rng, c));
      ++suite.cases;
    }
  };
  run(report.contrastive, 0, [](RngStream& rng, std::size_t) { return check_contrastive(rng); });
  run(report.triplet, 1, [](RngStream& rng, std::size_t c) { return check_triplet(rng, c % 2 == 0); });
  run(report.network_siamese, 2, [](RngStream& rng, std::size_t) { return check_network(rng, LossKind::siamese); });
  run(report.network_triplet, 3, [](RngStream& rng, std::size_t) { return check_network(rng, LossKind::triplet); });
  return report;
}

}  // namespace reid
