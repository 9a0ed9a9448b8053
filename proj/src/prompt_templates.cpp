#include "serendip/prompt_templates.hpp"

#include "serendip/numeric.hpp"

namespace serendip::prompting {

namespace {

constexpr std::string_view kEcommerceOpening =
    "You are a user of a Chinese e-commerce platform, and you have received a "
    "user survey that aims to gather your opinion on the serendipity of the "
    "items recommended to you. Serendipity here means that the item "
    "recommended is a pleasant surprise.";

constexpr std::string_view kMovieOpening =
    "You are a user of a movie platform, and you have received a user survey "
    "that aims to gather your opinion on the serendipity of the items "
    "recommended to you. Serendipity here means that the item recommended is "
    "a pleasant surprise.";

constexpr std::string_view kEcommerceBackground =
    "You have used the Chinese e-commerce platform, and this recommendation "
    "is based on your behavior history. You are provided with the genres of "
    "the recommended item and the items you have clicked on or purchased. "
    "Your behavior history is listed in a comma-separated format, sorted from "
    "oldest to newest.";

constexpr std::string_view kMovieBackground =
    "You have used the movie platform, and this recommendation is based on "
    "your behavior history. You are provided with the genres of the "
    "recommended item and the items you have watched and rated. Your behavior "
    "history is listed in a comma-separated format, sorted from oldest to "
    "newest.";

constexpr std::string_view kTask =
    "Please provide a serendipity rating for the recommended item using a "
    "5-point Likert scale: 1 - \"strongly disagree\"; 2 - \"disagree\"; 3 - "
    "\"neither agree nor disagree\"; 4 - \"agree\"; 5 - \"strongly agree\".\n"
    "Rate the recommended item from the perspective of serendipity, based on "
    "your behavior history.";

constexpr std::string_view kOutputFormat =
    "Generate only the rating number, without any additional commentary or "
    "explanation.";

}  // namespace

std::string_view opening_text(Domain domain) {
    return domain == Domain::movie ? kMovieOpening : kEcommerceOpening;
}

std::string_view background_text(Domain domain) {
    return domain == Domain::movie ? kMovieBackground : kEcommerceBackground;
}

std::string_view task_text() { return kTask; }

std::string_view output_format_text() { return kOutputFormat; }

std::string curiosity_section(double score) {
    return "## Curiosity\nYour curiosity score (CEI-II) is " +
           format_number(score) + " of 5.";
}

std::string big_five_section(const BigFive& traits) {
    return "## Personality\nYour Big Five personality traits (TIPI) are: "
           "openness " +
           format_number(traits.openness) + ", conscientiousness " +
           format_number(traits.conscientiousness) + ", extraversion " +
           format_number(traits.extraversion) + ", agreeableness " +
           format_number(traits.agreeableness) + ", neuroticism " +
           format_number(traits.neuroticism) + ".";
}

std::string age_section(int age) {
    return "## Age\nYou are " + std::to_string(age) + " years old.";
}

std::string gender_section(Gender gender) {
    return "## Gender\nYour gender is " + to_string(gender) + ".";
}

std::string short_term_profile_section(const std::string& text) {
    return "## Short-Term Profile\nYour recent interests: " + text;
}

std::string long_term_profile_section(const std::string& text) {
    return "## Long-Term Profile\nYour long-term interests: " + text;
}

std::string popularity_section(double popularity) {
    return "## Item Popularity\nThe recommended item's popularity score is " +
           format_number(popularity) + " on a 0-1 scale.";
}

std::string similarity_section(double min_jaccard) {
    return "## Item Similarity\nThe minimum Jaccard distance between the "
           "recommended item and the items in your behavior history is " +
           format_number(min_jaccard) + " (0 means identical audiences, 1 "
           "means no overlap).";
}

std::string render_long_term_summary_prompt(
    Domain domain, const std::string& titles_oldest_first) {
    const std::string what =
        domain == Domain::movie ? "movies the user watched" : "items the user "
                                                              "interacted with";
    return "Summarize the following " + what +
           " into a short description of the user's long-term interests. "
           "Answer with one or two sentences and no preamble.\nHistory "
           "(oldest to newest): " +
           titles_oldest_first;
}

}  // namespace serendip::prompting
