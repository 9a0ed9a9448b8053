#include "serendip/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <sstream>

#include "serendip/digest.hpp"
#include "serendip/numeric.hpp"
#include "serendip/prompt_templates.hpp"

namespace serendip::prompting {

std::optional<int> parse_rating(std::string_view reply) {
    for (std::size_t i = 0; i < reply.size(); ++i) {
        const char ch = reply[i];
        if (ch < '1' || ch > '5') continue;
        const bool glued_before =
            i > 0 && std::isalnum(static_cast<unsigned char>(reply[i - 1]));
        const bool glued_after =
            i + 1 < reply.size() &&
            std::isalnum(static_cast<unsigned char>(reply[i + 1]));
        if (!glued_before && !glued_after) return ch - '0';
    }
    return std::nullopt;
}

std::string to_string(AuxField f) {
    switch (f) {
        case AuxField::curiosity: return "curiosity";
        case AuxField::big_five: return "big_five";
        case AuxField::age: return "age";
        case AuxField::gender: return "gender";
        case AuxField::short_term_profile: return "short_term_profile";
        case AuxField::long_term_profile: return "long_term_profile";
        case AuxField::popularity: return "popularity";
        case AuxField::similarity: return "similarity";
    }
    return "?";
}

AuxField aux_field_from_string(const std::string& s) {
    if (s == "curiosity") return AuxField::curiosity;
    if (s == "big_five") return AuxField::big_five;
    if (s == "age") return AuxField::age;
    if (s == "gender") return AuxField::gender;
    if (s == "short_term_profile") return AuxField::short_term_profile;
    if (s == "long_term_profile") return AuxField::long_term_profile;
    if (s == "popularity") return AuxField::popularity;
    if (s == "similarity") return AuxField::similarity;
    throw ConfigError("unknown aux field: " + s);
}

std::string PromptSpec::digest() const {
    std::ostringstream s;
    s << "shots=" << shots << ";history_length=" << history_length
      << ";kind=" << include_interaction_kind
      << ";rating=" << include_rating_values << ";aux=";
    for (const AuxField f : aux) s << to_string(f) << ',';
    s << ";domain=" << serendip::to_string(domain_wording)
      << ";few_shot_seed=" << few_shot_seed << ";kinds=";
    if (history_kinds)
        for (const InteractionKind k : *history_kinds)
            s << serendip::to_string(k) << ',';
    else
        s << "all";
    s << ";weeks=" << short_term_weeks
      << ";template=" << kTemplateVersion;
    return Sha256::hex(s.str());
}

namespace {

std::string history_entry(const Dataset& dataset, const Interaction& act,
                          const PromptSpec& spec) {
    std::string entry = dataset.item(act.item_id).title;
    std::vector<std::string> notes;
    if (spec.include_interaction_kind)
        notes.push_back(serendip::to_string(act.kind));
    if (spec.include_rating_values && act.rating_value)
        notes.push_back("rated " + format_number(*act.rating_value));
    if (!notes.empty()) {
        entry += " (";
        for (std::size_t i = 0; i < notes.size(); ++i) {
            if (i > 0) entry += "; ";
            entry += notes[i];
        }
        entry += ")";
    }
    return entry;
}

// The interaction window a prompt may show: oldest -> newest, never the
// target item, never anything at or past the cutoff. Fetches extra so that
// dropping target occurrences still fills history_length slots when possible.
std::vector<Interaction> rendered_window(const EvaluationCase& c,
                                         const Dataset& dataset,
                                         const PromptSpec& spec) {
    const auto want = static_cast<std::size_t>(spec.history_length);
    auto interactions =
        visible_history(dataset, c, 2 * want, spec.history_kinds);
    std::erase_if(interactions, [&](const Interaction& act) {
        return act.item_id == c.target_item_id;
    });
    if (interactions.size() > want)
        interactions.erase(interactions.begin(),
                           interactions.end() - static_cast<std::ptrdiff_t>(want));
    return interactions;
}

std::string history_line(const EvaluationCase& c, const Dataset& dataset,
                         const PromptSpec& spec) {
    const auto interactions = rendered_window(c, dataset, spec);
    std::string line;
    for (std::size_t i = 0; i < interactions.size(); ++i) {
        if (i > 0) line += ", ";
        line += history_entry(dataset, interactions[i], spec);
    }
    return line;
}

std::string item_info(const Dataset& dataset, const std::string& item_id) {
    const ItemRecord& item = dataset.item(item_id);
    std::string info = item.title;
    if (!item.genres.empty()) {
        info += "; genres: ";
        for (std::size_t i = 0; i < item.genres.size(); ++i) {
            if (i > 0) info += ", ";
            info += item.genres[i];
        }
    }
    if (item.description) info += "; " + *item.description;
    return info;
}

std::string response_block(const EvaluationCase& c, const Dataset& dataset,
                           const PromptSpec& spec) {
    return "Your behavior history: [" + history_line(c, dataset, spec) +
           "]\nRecommended item: (" + item_info(dataset, c.target_item_id) +
           ")\nYour serendipity rating:";
}

std::string aux_sections(const EvaluationCase& c, const Dataset& dataset,
                         const features::FeatureIndex& index,
                         const PromptSpec& spec, const AuxProfiles* profiles) {
    const UserRecord& user = dataset.user(c.user_id);
    std::string out;
    const auto require = [&](bool present, const char* flag) {
        if (!present)
            throw PromptError(std::string("aux flag '") + flag +
                              "' set but the data is absent for user " +
                              user.user_id);
    };

    for (const AuxField f : spec.aux) {
        out += "\n";
        switch (f) {
            case AuxField::curiosity:
                require(user.curiosity.has_value(), "curiosity");
                out += curiosity_section(*user.curiosity);
                break;
            case AuxField::big_five:
                require(user.big_five.has_value(), "big_five");
                out += big_five_section(*user.big_five);
                break;
            case AuxField::age:
                require(user.age.has_value(), "age");
                out += age_section(*user.age);
                break;
            case AuxField::gender:
                require(user.gender.has_value(), "gender");
                out += gender_section(*user.gender);
                break;
            case AuxField::short_term_profile: {
                std::string text;
                if (profiles && profiles->short_term) {
                    text = *profiles->short_term;
                } else {
                    text = features::build_short_term_profile(
                               dataset, user, c.cutoff_timestamp,
                               spec.short_term_weeks)
                               .text;
                }
                out += short_term_profile_section(text);
                break;
            }
            case AuxField::long_term_profile:
                if (!profiles || !profiles->long_term)
                    throw PromptError(
                        "aux flag 'long_term_profile' set but no summarized "
                        "profile was supplied for user " +
                        user.user_id);
                out += long_term_profile_section(*profiles->long_term);
                break;
            case AuxField::popularity:
                out += popularity_section(index.popularity(c.target_item_id));
                break;
            case AuxField::similarity: {
                const auto interactions = rendered_window(c, dataset, spec);
                std::vector<std::string> ids;
                for (const Interaction& act : interactions)
                    ids.push_back(act.item_id);
                require(!ids.empty(), "similarity");
                out += similarity_section(
                    features::min_history_jaccard(index, c.target_item_id, ids));
                break;
            }
        }
    }
    return out;
}

}  // namespace

std::vector<EvaluationCase> select_few_shot_examples(
    std::span<const EvaluationCase> pool, int n, std::uint64_t seed) {
    if (n < 0) throw std::invalid_argument("select_few_shot_examples: n < 0");
    if (static_cast<std::size_t>(n) > pool.size())
        throw PromptError("insufficient examples: need " + std::to_string(n) +
                          ", pool has " + std::to_string(pool.size()));

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> remaining(pool.size());
    for (std::size_t i = 0; i < remaining.size(); ++i) remaining[i] = i;
    std::vector<std::size_t> selected;

    // One example per Likert level where available.
    for (int level = 1; level <= 5 && static_cast<int>(selected.size()) < n;
         ++level) {
        std::vector<std::size_t> candidates;
        for (const std::size_t idx : remaining)
            if (pool[idx].ground_truth == level) candidates.push_back(idx);
        if (candidates.empty()) continue;
        const std::size_t pick = candidates[rng() % candidates.size()];
        selected.push_back(pick);
        std::erase(remaining, pick);
    }
    // Remainder: uniform draws without replacement.
    while (static_cast<int>(selected.size()) < n) {
        const std::size_t slot = rng() % remaining.size();
        selected.push_back(remaining[slot]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(slot));
    }

    std::vector<EvaluationCase> out;
    out.reserve(selected.size());
    for (const std::size_t idx : selected) out.push_back(pool[idx]);
    std::sort(out.begin(), out.end(),
              [](const EvaluationCase& a, const EvaluationCase& b) {
                  if (a.ground_truth != b.ground_truth)
                      return a.ground_truth < b.ground_truth;
                  return a.case_index < b.case_index;
              });
    return out;
}

RenderedPrompt build_prompt(const EvaluationCase& c, const Dataset& dataset,
                            const features::FeatureIndex& index,
                            const PromptSpec& spec,
                            std::span<const EvaluationCase> shot_pool,
                            const AuxProfiles* profiles) {
    if (spec.shots < 0)
        throw std::invalid_argument("build_prompt: shots must be >= 0");
    if (spec.history_length < 1)
        throw std::invalid_argument("build_prompt: history_length must be >= 1");

    std::string text;
    text += opening_text(spec.domain_wording);
    text += "\n## Background\n";
    text += background_text(spec.domain_wording);
    text += aux_sections(c, dataset, index, spec, profiles);
    text += "\n## Task\n";
    text += task_text();
    text += "\n## Output Format\n";
    text += output_format_text();

    if (spec.shots > 0) {
        const auto examples =
            select_few_shot_examples(shot_pool, spec.shots, spec.few_shot_seed);
        text += "\n## Examples";
        for (const EvaluationCase& ex : examples) {
            text += "\nYour behavior history: [" +
                    history_line(ex, dataset, spec) + "]\nRecommended item: (" +
                    item_info(dataset, ex.target_item_id) +
                    ")\nYour serendipity rating: " +
                    std::to_string(ex.ground_truth) + "\n";
        }
    }

    text += "\n## Response\n";
    text += response_block(c, dataset, spec);

    return RenderedPrompt{std::move(text), c.case_index, spec.digest()};
}

}  // namespace serendip::prompting
