#include "serendip/proxy_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "serendip/numeric.hpp"

namespace serendip::proxy {

namespace {

std::vector<std::string> history_item_ids(const EvaluationCase& c,
                                          const Dataset& dataset,
                                          std::size_t k) {
    const auto interactions = visible_history(dataset, c, k);
    std::vector<std::string> ids;
    ids.reserve(interactions.size());
    for (const Interaction& act : interactions) ids.push_back(act.item_id);
    if (ids.empty())
        throw std::invalid_argument("empty history for user " + c.user_id);
    return ids;
}

constexpr std::size_t kFullHistory = std::numeric_limits<std::size_t>::max();

}  // namespace

SogWeights::SogWeights(double relevance_w, double diversity_w,
                       double dissimilarity_w, double unpopularity_w)
    : relevance_w_(relevance_w),
      diversity_w_(diversity_w),
      dissimilarity_w_(dissimilarity_w),
      unpopularity_w_(unpopularity_w) {
    if (relevance_w_ < 0 || diversity_w_ < 0 || dissimilarity_w_ < 0 ||
        unpopularity_w_ < 0)
        throw std::invalid_argument("SogWeights: weights must be >= 0");
    const double sum =
        relevance_w_ + diversity_w_ + dissimilarity_w_ + unpopularity_w_;
    if (sum <= 0)
        throw std::invalid_argument("SogWeights: at least one weight must be > 0");
    relevance_w_ /= sum;
    diversity_w_ /= sum;
    dissimilarity_w_ /= sum;
    unpopularity_w_ /= sum;
}

double sog_score(const EvaluationCase& c, const Dataset& dataset,
                 const features::FeatureIndex& index, const SogWeights& weights,
                 std::span<const std::string> batch, int history_length) {
    const auto history =
        history_item_ids(c, dataset, static_cast<std::size_t>(history_length));

    const double rel = features::relevance(index, c.target_item_id, history);
    const double dissim =
        features::min_history_jaccard(index, c.target_item_id, history);
    const double unpop = 1.0 - index.popularity(c.target_item_id);

    if (batch.empty()) {
        const double keep = 1.0 - weights.diversity_w();
        if (keep <= 0)
            throw std::invalid_argument(
                "sog_score: diversity-only weights require a batch");
        return (weights.relevance_w() * rel + weights.dissimilarity_w() * dissim +
                weights.unpopularity_w() * unpop) /
               keep;
    }

    const auto& target_users = index.users_of(c.target_item_id);
    double diversity = 0;
    for (const std::string& b : batch)
        diversity += features::jaccard_distance(target_users, index.users_of(b));
    diversity /= static_cast<double>(batch.size());

    return weights.relevance_w() * rel + weights.diversity_w() * diversity +
           weights.dissimilarity_w() * dissim + weights.unpopularity_w() * unpop;
}

double snpr_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, double lambda,
                  int history_length) {
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("snpr_score: lambda must be in [0,1]");
    const auto history =
        history_item_ids(c, dataset, static_cast<std::size_t>(history_length));
    const double rel = features::relevance(index, c.target_item_id, history);
    const double unexp =
        features::min_history_jaccard(index, c.target_item_id, history);
    return lambda * rel + (1.0 - lambda) * unexp;
}

double purs_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, std::uint64_t seed, int k,
                  double unexp_factor, int history_length) {
    const auto history =
        history_item_ids(c, dataset, static_cast<std::size_t>(history_length));
    const double rel = features::relevance(index, c.target_item_id, history);
    const auto clusters = features::interest_clusters(index, history, k, seed);
    const double unexp =
        features::unexpectedness(index, c.target_item_id, clusters);
    const double activated = std::clamp(unexp, 0.0, 1.0);
    return rel + activated * unexp_factor;
}

double desr_combine(double acc, double dif) {
    const double denom = acc + dif;
    if (denom == 0.0) return 0.0;
    return acc * dif / denom;
}

double desr_score(const EvaluationCase& c, const Dataset& dataset,
                  const features::FeatureIndex& index, int short_window) {
    const auto long_history = history_item_ids(c, dataset, kFullHistory);
    const auto short_history =
        history_item_ids(c, dataset, static_cast<std::size_t>(short_window));

    const double long_jaccard =
        features::min_history_jaccard(index, c.target_item_id, long_history);
    const double short_jaccard =
        features::min_history_jaccard(index, c.target_item_id, short_history);

    const double acc = ((1.0 - long_jaccard) + (1.0 - short_jaccard)) / 2.0;
    const double dif =
        (long_jaccard + (1.0 - index.popularity(c.target_item_id))) / 2.0;
    return desr_combine(acc, dif);
}

std::vector<int> normalize_to_likert(std::span<const double> raw) {
    if (raw.empty())
        throw std::invalid_argument("normalize_to_likert: empty vector");
    for (const double v : raw)
        if (!std::isfinite(v))
            throw std::invalid_argument("normalize_to_likert: non-finite value");

    const auto [min_it, max_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *min_it;
    const double hi = *max_it;

    std::vector<int> scores;
    scores.reserve(raw.size());
    if (lo == hi) {
        scores.assign(raw.size(), 3);
        return scores;
    }
    for (const double v : raw) {
        const int s = round_half_up_int((v - lo) / (hi - lo) * 4.0 + 1.0);
        scores.push_back(std::clamp(s, 1, 5));
    }
    return scores;
}

}  // namespace serendip::proxy
