#pragma once

#include <string>
#include <string_view>

#include "serendip/data_model.hpp"

namespace serendip::prompting {

// The survey prompt text, kept in one place so the exact wording sent to
// models is auditable and versioned with the code.

inline constexpr std::string_view kTemplateVersion = "survey-v1";

std::string_view opening_text(Domain domain);
std::string_view background_text(Domain domain);
std::string_view task_text();
std::string_view output_format_text();

// Labeled sub-sections for the optional auxiliary data, one template each.
std::string curiosity_section(double score);
std::string big_five_section(const BigFive& traits);
std::string age_section(int age);
std::string gender_section(Gender gender);
std::string short_term_profile_section(const std::string& text);
std::string long_term_profile_section(const std::string& text);
std::string popularity_section(double popularity);
std::string similarity_section(double min_jaccard);

std::string render_long_term_summary_prompt(Domain domain,
                                            const std::string& titles_oldest_first);

}  // namespace serendip::prompting
