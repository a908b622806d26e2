#include "reid/losses.hpp"

#include <algorithm>
#include <cmath>

#include "reid/error.hpp"

namespace reid {

namespace {

void require_three(const Vector& a, const Vector& p, const Vector& n) {
  require_same_dim(a.dim(), p.dim(), "triplet");
  require_same_dim(a.dim(), n.dim(), "triplet");
}

// Gradient of D(x, y) with respect to x.
Vector distance_grad(const Vector& x, const Vector& y, bool squared) {
  Vector diff = x - y;
  if (squared) return diff * 2.0;
  const double d = norm(diff.values());
  if (d == 0.0) return Vector(x.dim());
  return diff * (1.0 / d);
}

}  // namespace

void LossConfig::validate() const {
  if (!(margin > 0.0) || !std::isfinite(margin)) {
    throw ConfigError("loss.margin must be a finite value > 0");
  }
}

double contrastive_loss(const Vector& e1, const Vector& e2, bool same, const LossConfig& cfg) {
  require_same_dim(e1.dim(), e2.dim(), "contrastive pair");
  const double d2 = squared_distance(e1, e2);
  if (same) return d2;
  const double gap = std::max(0.0, cfg.margin - std::sqrt(d2));
  return gap * gap;
}

PairGrad contrastive_grad(const Vector& e1, const Vector& e2, bool same, const LossConfig& cfg) {
  require_same_dim(e1.dim(), e2.dim(), "contrastive pair");
  Vector diff = e1 - e2;
  if (same) {
    Vector g1 = diff * 2.0;
    Vector g2 = diff * -2.0;
    return {std::move(g1), std::move(g2)};
  }
  const double d = norm(diff.values());
  if (d >= cfg.margin || d == 0.0) {
    return {Vector(e1.dim()), Vector(e1.dim())};
  }
  // dL/dd = -2 (m - d), dd/de1 = diff / d
  const double scale = -2.0 * (cfg.margin - d) / d;
  Vector g1 = diff * scale;
  Vector g2 = diff * -scale;
  return {std::move(g1), std::move(g2)};
}

double triplet_distance(const Vector& x, const Vector& y, const LossConfig& cfg) {
  return cfg.squared_distances ? squared_distance(x, y) : euclidean_distance(x, y);
}

double triplet_loss(const Vector& anchor, const Vector& positive, const Vector& negative,
                    const LossConfig& cfg) {
  require_three(anchor, positive, negative);
  return std::max(0.0, triplet_distance(anchor, positive, cfg) -
                           triplet_distance(anchor, negative, cfg) + cfg.margin);
}

TripletGrad triplet_grad(const Vector& anchor, const Vector& positive, const Vector& negative,
                         const LossConfig& cfg) {
  require_three(anchor, positive, negative);
  const std::size_t dim = anchor.dim();
  if (triplet_loss(anchor, positive, negative, cfg) <= 0.0) {
    return {Vector(dim), Vector(dim), Vector(dim)};
  }
  Vector to_positive = distance_grad(anchor, positive, cfg.squared_distances);
  Vector to_negative = distance_grad(anchor, negative, cfg.squared_distances);
  Vector g_anchor = to_positive - to_negative;
  Vector g_positive = to_positive * -1.0;
  return {std::move(g_anchor), std::move(g_positive), std::move(to_negative)};
}

}  // namespace reid
