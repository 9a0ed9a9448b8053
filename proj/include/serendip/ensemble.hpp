#pragma once

#include <span>
#include <string>
#include <vector>

namespace serendip::ensemble {

enum class Rule { mean };

/// Named members and the aggregation rule. Only score averaging ships; the
/// enumeration leaves room for weighted or median variants.
struct EnsembleSpec {
    std::vector<std::string> members;
    Rule rule = Rule::mean;
};

/// Element-wise arithmetic mean over the members' score vectors. All vectors
/// must share length and case order; a single member passes through.
std::vector<double> ensemble_scores(
    std::span<const std::vector<double>> member_scores,
    const EnsembleSpec& spec = {});

}  // namespace serendip::ensemble
