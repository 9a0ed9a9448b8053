#include "serendip/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "serendip/numeric.hpp"
#include "serendip/prompt_templates.hpp"

namespace serendip::features {

namespace {

std::size_t intersection_size(std::span<const std::int32_t> a,
                              std::span<const std::int32_t> b) {
    std::size_t i = 0, j = 0, count = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

// Squared Euclidean distance between a binary incidence vector (given by its
// support) and a dense centroid: sum(c_j^2) - 2 * sum_{j in support} c_j + |support|.
double sq_distance_to_centroid(std::span<const std::int32_t> support,
                               const std::vector<double>& centroid,
                               double centroid_sq_norm) {
    double dot = 0;
    for (const std::int32_t ordinal : support) dot += centroid[ordinal];
    const double d2 = centroid_sq_norm - 2.0 * dot +
                      static_cast<double>(support.size());
    return std::max(d2, 0.0);
}

double sq_norm(const std::vector<double>& v) {
    double s = 0;
    for (const double x : v) s += x * x;
    return s;
}

}  // namespace

double jaccard_distance(std::span<const std::int32_t> a,
                        std::span<const std::int32_t> b) {
    if (a.empty() && b.empty()) return 0.0;
    const std::size_t inter = intersection_size(a, b);
    const std::size_t uni = a.size() + b.size() - inter;
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

FeatureIndex::FeatureIndex(const Dataset& dataset) : domain_(dataset.domain) {
    std::map<std::string, std::int32_t> ordinals;
    for (const auto& [uid, user] : dataset.users)
        ordinals.emplace(uid, static_cast<std::int32_t>(ordinals.size()));
    user_count_ = static_cast<int>(ordinals.size());

    for (const auto& [iid, item] : dataset.items) {
        incidence_[iid];  // items nobody touched still resolve
        if (item.popularity_raw) hot_flags_[iid] = *item.popularity_raw;
    }
    for (const auto& [uid, user] : dataset.users) {
        const std::int32_t ordinal = ordinals.at(uid);
        for (const Interaction& act : user.history)
            incidence_[act.item_id].push_back(ordinal);
    }
    for (auto& [iid, users] : incidence_) {
        std::sort(users.begin(), users.end());
        users.erase(std::unique(users.begin(), users.end()), users.end());
    }
}

const std::vector<std::int32_t>& FeatureIndex::users_of(
    const std::string& item_id) const {
    const auto it = incidence_.find(item_id);
    if (it == incidence_.end())
        throw DatasetError("unknown item in feature index: " + item_id);
    return it->second;
}

double FeatureIndex::popularity(const std::string& item_id) const {
    if (domain_ == Domain::movie) {
        if (user_count_ == 0) return 0.0;
        return static_cast<double>(users_of(item_id).size()) / user_count_;
    }
    const auto it = hot_flags_.find(item_id);
    if (it == hot_flags_.end()) {
        users_of(item_id);  // still validate the id
        return 0.0;
    }
    return it->second != 0.0 ? 1.0 : 0.0;
}

double min_history_jaccard(const FeatureIndex& index, const std::string& target,
                           std::span<const std::string> history) {
    if (history.empty())
        throw std::invalid_argument("min_history_jaccard: no history");
    const auto& target_users = index.users_of(target);
    double best = 1.0;
    for (const std::string& h : history)
        best = std::min(best, jaccard_distance(target_users, index.users_of(h)));
    return best;
}

double relevance(const FeatureIndex& index, const std::string& target,
                 std::span<const std::string> history) {
    if (history.empty()) throw std::invalid_argument("relevance: no history");
    const auto& target_users = index.users_of(target);
    double sum = 0;
    for (const std::string& h : history)
        sum += 1.0 - jaccard_distance(target_users, index.users_of(h));
    return sum / static_cast<double>(history.size());
}

InterestClusters interest_clusters(const FeatureIndex& index,
                                   std::span<const std::string> history, int k,
                                   std::uint64_t seed) {
    if (history.empty())
        throw std::invalid_argument("interest_clusters: no history");
    if (k < 1) throw std::invalid_argument("interest_clusters: k must be >= 1");

    // Distinct incidence vectors, first-occurrence order.
    std::vector<std::span<const std::int32_t>> points;
    std::set<std::vector<std::int32_t>> seen;
    for (const std::string& item : history) {
        const auto& users = index.users_of(item);
        if (seen.insert(users).second) points.emplace_back(users);
    }

    const int k_eff = std::min<int>(k, static_cast<int>(points.size()));
    InterestClusters result;
    result.requested_k = k;

    // Farthest-point initialization, seeded first pick, lowest-index ties.
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> chosen;
    chosen.push_back(static_cast<std::size_t>(rng() % points.size()));
    auto point_sq_dist = [&](std::size_t a, std::size_t b) {
        const std::size_t inter = intersection_size(points[a], points[b]);
        return static_cast<double>(points[a].size() + points[b].size() -
                                   2 * inter);
    };
    while (static_cast<int>(chosen.size()) < k_eff) {
        double best_dist = -1.0;
        std::size_t best_idx = 0;
        for (std::size_t p = 0; p < points.size(); ++p) {
            double nearest = std::numeric_limits<double>::max();
            for (const std::size_t c : chosen)
                nearest = std::min(nearest, point_sq_dist(p, c));
            if (nearest > best_dist) {
                best_dist = nearest;
                best_idx = p;
            }
        }
        chosen.push_back(best_idx);
    }

    const std::size_t dims = static_cast<std::size_t>(index.user_count());
    std::vector<std::vector<double>> centroids;
    for (const std::size_t c : chosen) {
        std::vector<double> centroid(dims, 0.0);
        for (const std::int32_t ordinal : points[c]) centroid[ordinal] = 1.0;
        centroids.push_back(std::move(centroid));
    }

    // Lloyd iterations with a hard cap; assignment ties go to the lowest
    // centroid index so reruns are bit-identical.
    constexpr int kMaxIterations = 50;
    std::vector<std::size_t> assignment(points.size(), 0);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        std::vector<double> sq_norms(centroids.size());
        for (std::size_t c = 0; c < centroids.size(); ++c)
            sq_norms[c] = sq_norm(centroids[c]);

        bool changed = false;
        for (std::size_t p = 0; p < points.size(); ++p) {
            double best = std::numeric_limits<double>::max();
            std::size_t best_c = 0;
            for (std::size_t c = 0; c < centroids.size(); ++c) {
                const double d2 =
                    sq_distance_to_centroid(points[p], centroids[c], sq_norms[c]);
                if (d2 < best) {
                    best = d2;
                    best_c = c;
                }
            }
            if (assignment[p] != best_c) {
                assignment[p] = best_c;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;

        for (std::size_t c = 0; c < centroids.size(); ++c) {
            std::vector<double> mean(dims, 0.0);
            std::size_t members = 0;
            for (std::size_t p = 0; p < points.size(); ++p) {
                if (assignment[p] != c) continue;
                ++members;
                for (const std::int32_t ordinal : points[p]) mean[ordinal] += 1.0;
            }
            if (members == 0) continue;  // keep the previous centroid
            for (double& x : mean) x /= static_cast<double>(members);
            centroids[c] = std::move(mean);
        }
    }

    result.centroids = std::move(centroids);
    return result;
}

double unexpectedness(const FeatureIndex& index, const std::string& target,
                      const InterestClusters& clusters) {
    if (clusters.centroids.empty())
        throw std::invalid_argument("unexpectedness: no clusters");
    const auto& support = index.users_of(target);
    double best = std::numeric_limits<double>::max();
    for (const auto& centroid : clusters.centroids) {
        const double d2 =
            sq_distance_to_centroid(support, centroid, sq_norm(centroid));
        best = std::min(best, d2);
    }
    const double d = std::sqrt(best);
    return d / (1.0 + d);
}

namespace {

std::vector<const Interaction*> interactions_in(const UserRecord& user,
                                                std::int64_t start,
                                                std::int64_t end) {
    std::vector<const Interaction*> out;
    for (const Interaction& act : user.history)
        if (act.timestamp >= start && act.timestamp < end) out.push_back(&act);
    return out;
}

std::string summarize_window(const Dataset& dataset,
                             const std::vector<const Interaction*>& acts,
                             std::size_t recent_titles) {
    std::map<std::string, int> genre_counts;
    for (const Interaction* act : acts)
        for (const std::string& g : dataset.item(act->item_id).genres)
            genre_counts[g] += 1;

    std::vector<std::pair<std::string, int>> genres(genre_counts.begin(),
                                                    genre_counts.end());
    std::sort(genres.begin(), genres.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    std::ostringstream out;
    out << "Interacted with " << acts.size() << " item"
        << (acts.size() == 1 ? "" : "s") << ".";
    if (!genres.empty()) {
        out << " Top genres: ";
        for (std::size_t i = 0; i < genres.size(); ++i) {
            if (i > 0) out << ", ";
            out << genres[i].first << " (" << genres[i].second << ")";
        }
        out << ".";
    }
    out << " Most recent: ";
    const std::size_t take = std::min(recent_titles, acts.size());
    for (std::size_t i = 0; i < take; ++i) {
        if (i > 0) out << ", ";
        out << dataset.item(acts[acts.size() - 1 - i]->item_id).title;
    }
    out << ".";
    return out.str();
}

}  // namespace

UserProfile build_short_term_profile(const Dataset& dataset, const UserRecord& user,
                                     std::int64_t cutoff, int window_weeks) {
    if (window_weeks < 2 || window_weeks > 4)
        throw std::invalid_argument(
            "build_short_term_profile: window_weeks must be in {2,3,4}");
    constexpr std::int64_t kWeekSeconds = 7 * 24 * 3600;
    UserProfile profile;
    profile.kind = ProfileKind::short_term;
    profile.source_window = {cutoff - window_weeks * kWeekSeconds, cutoff};

    const auto acts = interactions_in(user, profile.source_window.start, cutoff);
    profile.text = acts.empty() ? "no recent activity"
                                : summarize_window(dataset, acts, 5);
    return profile;
}

UserProfile build_long_term_profile(const Dataset& dataset, const UserRecord& user,
                                    std::int64_t cutoff, LlmClient& client,
                                    const ModelSpec& summarizer) {
    UserProfile profile;
    profile.kind = ProfileKind::long_term;

    const auto acts = interactions_in(
        user, std::numeric_limits<std::int64_t>::min(), cutoff);
    profile.source_window = {acts.empty() ? cutoff : acts.front()->timestamp,
                             cutoff};
    if (acts.empty()) {
        profile.text = "no history";
        return profile;
    }

    std::ostringstream titles;
    for (std::size_t i = 0; i < acts.size(); ++i) {
        if (i > 0) titles << ", ";
        titles << dataset.item(acts[i]->item_id).title;
    }
    const std::string prompt =
        prompting::render_long_term_summary_prompt(dataset.domain, titles.str());
    profile.text = client.complete(summarizer, prompt, /*run_index=*/0);
    return profile;
}

}  // namespace serendip::features
