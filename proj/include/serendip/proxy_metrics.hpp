#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "serendip/data_model.hpp"
#include "serendip/features.hpp"

namespace serendip::proxy {

/// Component weights for the weighted-sum metric. Normalized to sum 1 at
/// construction; defaults are uniform.
class SogWeights {
public:
    SogWeights() : SogWeights(1.0, 1.0, 1.0, 1.0) {}
    SogWeights(double relevance_w, double diversity_w, double dissimilarity_w,
               double unpopularity_w);

    double relevance_w() const { return relevance_w_; }
    double diversity_w() const { return diversity_w_; }
    double dissimilarity_w() const { return dissimilarity_w_; }
    double unpopularity_w() const { return unpopularity_w_; }

private:
    double relevance_w_;
    double diversity_w_;
    double dissimilarity_w_;
    double unpopularity_w_;
};

/// Raw (pre-normalization) scores for one method, aligned index-by-index with
/// the evaluated cases.
struct RawScoreVector {
    std::string method_id;
    std::vector<double> values;
};

/// Weighted sum of relevance, diversity, history dissimilarity, and
/// unpopularity. Diversity is the mean Jaccard distance of the target against
/// `batch`; without a batch the term is dropped and its weight redistributed
/// proportionally across the remaining three.
double sog_score(const EvaluationCase& c, const Dataset& dataset,
                 const features::FeatureIndex& index, const SogWeights& weights,
                 std::span<const std::string> batch = {},
                 int history_length = 10);

/// lambda * relevance + (1 - lambda) * unexpectedness, where unexpectedness
/// is the minimum history Jaccard distance.
double snpr_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, double lambda = 0.7,
                  int history_length = 10);

/// relevance + f(unexpectedness) * unexp_factor with f = identity clipped to
/// [0,1]; unexpectedness is the squashed distance to the nearest interest
/// cluster (k-means over the history, k clamped to min(k, |history|)).
double purs_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, std::uint64_t seed,
                  int k = 5, double unexp_factor = 1.0, int history_length = 10);

/// acc * dif / (acc + dif); 0 when both terms vanish.
double desr_combine(double acc, double dif);

/// F-score-style combination: acc averages audience similarity over the full
/// pre-cutoff history and the last `short_window` interactions; dif averages
/// the minimum history Jaccard distance and the target's unpopularity.
double desr_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, int short_window = 10);

/// Min-max mapping of a raw score vector onto the integer Likert range:
/// round((x - min) / (max - min) * 4 + 1), ties rounding up. A constant
/// vector maps to all 3s.
std::vector<int> normalize_to_likert(std::span<const double> raw);

}  // namespace serendip::proxy
