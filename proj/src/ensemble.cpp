#include "serendip/ensemble.hpp"

#include <stdexcept>

namespace serendip::ensemble {

std::vector<double> ensemble_scores(
    std::span<const std::vector<double>> member_scores, const EnsembleSpec& spec) {
    if (member_scores.empty())
        throw std::invalid_argument("ensemble_scores: no member score vectors");
    if (spec.rule != Rule::mean)
        throw std::invalid_argument("ensemble_scores: unsupported rule");

    const std::size_t n = member_scores.front().size();
    for (const auto& member : member_scores)
        if (member.size() != n)
            throw std::invalid_argument(
                "ensemble_scores: member vectors differ in length (" +
                std::to_string(member.size()) + " vs " + std::to_string(n) + ")");

    std::vector<double> out(n, 0.0);
    for (const auto& member : member_scores)
        for (std::size_t i = 0; i < n; ++i) out[i] += member[i];
    for (double& v : out) v /= static_cast<double>(member_scores.size());
    return out;
}

}  // namespace serendip::ensemble
