#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "serendip/data_model.hpp"
#include "serendip/llm_client.hpp"

namespace serendip::features {

/// 1 - |a ∩ b| / |a ∪ b| over sorted, duplicate-free id sequences.
/// Two empty sets have distance 0.
double jaccard_distance(std::span<const std::int32_t> a,
                        std::span<const std::int32_t> b);

/// Precomputed user-incidence vectors: for each item, the ordinals of the
/// users who interacted with it. Deterministic given the Dataset (users are
/// numbered in id order) and immutable afterwards.
class FeatureIndex {
public:
    explicit FeatureIndex(const Dataset& dataset);

    int user_count() const { return user_count_; }
    Domain domain() const { return domain_; }

    /// Sorted user ordinals of the item's incidence vector.
    const std::vector<std::int32_t>& users_of(const std::string& item_id) const;

    /// Movie domain: fraction of all users with an interaction on the item.
    /// E-commerce: the platform hot flag from popularity_raw (0 when absent).
    double popularity(const std::string& item_id) const;

private:
    Domain domain_;
    int user_count_ = 0;
    std::map<std::string, std::vector<std::int32_t>> incidence_;
    std::map<std::string, double> hot_flags_;
};

double min_history_jaccard(const FeatureIndex& index, const std::string& target,
                           std::span<const std::string> history);

/// Mean audience similarity (1 - Jaccard distance) between the target and
/// each history item.
double relevance(const FeatureIndex& index, const std::string& target,
                 std::span<const std::string> history);

struct InterestClusters {
    std::vector<std::vector<double>> centroids;  // dense, user-incidence space
    int requested_k = 0;
};

/// Seeded k-means over the history items' incidence vectors. k is clamped to
/// the number of distinct vectors; farthest-point initialization and a fixed
/// iteration cap make the result bit-identical for identical inputs.
InterestClusters interest_clusters(const FeatureIndex& index,
                                   std::span<const std::string> history, int k,
                                   std::uint64_t seed);

/// Minimum Euclidean distance from the target's incidence vector to any
/// centroid, squashed to [0,1) as d / (1 + d).
double unexpectedness(const FeatureIndex& index, const std::string& target,
                      const InterestClusters& clusters);

struct TimeWindow {
    std::int64_t start = 0;
    std::int64_t end = 0;  // exclusive
};

enum class ProfileKind { short_term, long_term };

struct UserProfile {
    ProfileKind kind = ProfileKind::short_term;
    std::string text;
    TimeWindow source_window;
};

/// Template-generated summary of the user's last `window_weeks` (2..4) weeks
/// before cutoff: frequency-ordered genres plus the most recent titles.
UserProfile build_short_term_profile(const Dataset& dataset, const UserRecord& user,
                                     std::int64_t cutoff, int window_weeks);

/// LLM-written summary of the full pre-cutoff history. Replies go through the
/// client's cache, so repeated builds are free.
UserProfile build_long_term_profile(const Dataset& dataset, const UserRecord& user,
                                    std::int64_t cutoff, LlmClient& client,
                                    const ModelSpec& summarizer);

}  // namespace serendip::features
