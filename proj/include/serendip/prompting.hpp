#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "serendip/data_model.hpp"
#include "serendip/features.hpp"
#include "serendip/rating_parse.hpp"

namespace serendip::prompting {

enum class AuxField {
    curiosity,
    big_five,
    age,
    gender,
    short_term_profile,
    long_term_profile,
    popularity,
    similarity,
};

std::string to_string(AuxField f);
AuxField aux_field_from_string(const std::string& s);

/// Full configuration of prompt construction. Two specs with equal fields
/// render byte-identical prompts for the same case.
struct PromptSpec {
    int shots = 0;            // 0 = zero-shot
    int history_length = 10;  // rendered history entries, most recent first
    bool include_interaction_kind = false;
    bool include_rating_values = false;
    std::set<AuxField> aux;
    Domain domain_wording = Domain::ecommerce;
    std::uint64_t few_shot_seed = 0;
    // Restrict rendered history to these interaction kinds (all when absent).
    std::optional<std::set<InteractionKind>> history_kinds;
    int short_term_weeks = 2;  // window for the short-term profile section

    /// Stable digest over every field above.
    std::string digest() const;
};

struct RenderedPrompt {
    std::string text;
    int case_index = -1;
    std::string spec_digest;
};

/// Precomputed profile texts for the profile aux sections. The short-term
/// text is optional (it can be derived on the fly); the long-term text must
/// be supplied because producing it needs an LLM.
struct AuxProfiles {
    std::optional<std::string> short_term;
    std::optional<std::string> long_term;
};

/// Stratified, seeded draw of n worked examples: one per Likert level where
/// available, remainder uniform without replacement; returned in ascending
/// (rating, case_index) order. Callers must keep the pool disjoint from the
/// cases being evaluated.
std::vector<EvaluationCase> select_few_shot_examples(
    std::span<const EvaluationCase> pool, int n, std::uint64_t seed);

/// Renders the survey prompt for one case: role framing, background,
/// optional aux sections, task, output format, optional worked examples, and
/// the response section. Pure and deterministic; post-cutoff interactions and
/// the target item never appear in the rendered history.
RenderedPrompt build_prompt(const EvaluationCase& c, const Dataset& dataset,
                            const features::FeatureIndex& index,
                            const PromptSpec& spec,
                            std::span<const EvaluationCase> shot_pool = {},
                            const AuxProfiles* profiles = nullptr);

}  // namespace serendip::prompting
