#include "reid/census.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "reid/error.hpp"
#include "reid/manifest.hpp"

namespace reid {

namespace {

double pairs_in(std::size_t n) {
  return n < 2 ? 0.0 : static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
}

}  // namespace

Gallery::Gallery(double match_threshold, std::size_t max_exemplars)
    : threshold_(match_threshold), max_exemplars_(max_exemplars) {
  if (!(match_threshold >= 0.0)) throw ConfigError("census.threshold must be >= 0");
  if (max_exemplars == 0) throw ConfigError("census.max_exemplars must be at least 1");
}

CensusDecision Gallery::step(const Vector& sighting) {
  if (sighting.empty()) throw DimensionError("census sighting is empty");
  if (entries_.empty()) {
    dim_ = sighting.dim();
  } else {
    require_same_dim(dim_, sighting.dim(), "census sighting");
  }

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_entry = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (const auto& exemplar : entries_[i].exemplars) {
      const double d = euclidean_distance(sighting, exemplar);
      if (d < best) {
        best = d;
        best_entry = i;
      }
    }
  }

  if (!entries_.empty() && best <= threshold_) {
    auto& entry = entries_[best_entry];
    if (entry.exemplars.size() < max_exemplars_) entry.exemplars.push_back(sighting);
    return {CensusOutcome::matched, entry.id, best};
  }
  const std::size_t id = entries_.size();
  entries_.push_back({id, {sighting}});
  return {CensusOutcome::enrolled, id, best};
}

CensusReport run_census(std::span<const Sighting> stream, double threshold, const EmbeddingNet* net,
                        std::size_t max_exemplars) {
  if (stream.empty()) throw DataError("census needs a nonempty sighting stream");
  Gallery gallery(threshold, max_exemplars);
  CensusReport report;
  bool all_truth = true;
  for (const auto& s : stream) {
    const Vector embedding = net != nullptr ? net->embed(s.features) : s.features;
    report.decisions.push_back(gallery.step(embedding));
    report.population_curve.push_back(gallery.population());
    all_truth = all_truth && s.truth.has_value();
  }
  report.estimated_population = gallery.population();

  if (all_truth) {
    std::map<std::string, std::size_t> per_truth;
    std::map<std::size_t, std::size_t> per_gallery;
    std::map<std::pair<std::string, std::size_t>, std::size_t> joint;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const std::string& t = *stream[i].truth;
      const std::size_t g = report.decisions[i].gallery_id;
      ++per_truth[t];
      ++per_gallery[g];
      ++joint[{t, g}];
    }
    double together = 0.0;
    double predicted = 0.0;
    double actual = 0.0;
    for (const auto& [key, n] : joint) together += pairs_in(n);
    for (const auto& [key, n] : per_gallery) predicted += pairs_in(n);
    for (const auto& [key, n] : per_truth) actual += pairs_in(n);
    report.true_population = per_truth.size();
    report.pair_precision = predicted > 0.0 ? together / predicted : 1.0;
    report.pair_recall = actual > 0.0 ? together / actual : 1.0;
  }
  return report;
}

void write_census_report(std::ostream& out, const CensusReport& report) {
  out << "index,decision,gallery_id,min_distance\n";
  for (std::size_t i = 0; i < report.decisions.size(); ++i) {
    const auto& d = report.decisions[i];
    out << i << ',' << (d.outcome == CensusOutcome::matched ? "matched" : "enrolled") << ','
        << d.gallery_id << ',' << format_real(d.min_distance) << '\n';
  }
  out << "summary,estimated_population," << report.estimated_population << ",\n";
  if (report.true_population) out << "summary,true_population," << *report.true_population << ",\n";
  if (report.pair_precision) out << "summary,pair_precision," << format_real(*report.pair_precision) << ",\n";
  if (report.pair_recall) out << "summary,pair_recall," << format_real(*report.pair_recall) << ",\n";
}

}  // namespace reid
