#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "serendip/errors.hpp"

namespace serendip {

enum class Domain { ecommerce, movie };
enum class Gender { female, male, other, undisclosed };
enum class InteractionKind { click, purchase, rating, unspecified };

std::string to_string(Domain d);
std::string to_string(Gender g);
std::string to_string(InteractionKind k);
Domain domain_from_string(const std::string& s);
Gender gender_from_string(const std::string& s);
InteractionKind interaction_kind_from_string(const std::string& s);

/// TIPI-style Big Five scores. All five are present or the tuple is absent.
struct BigFive {
    double openness = 0;
    double conscientiousness = 0;
    double extraversion = 0;
    double agreeableness = 0;
    double neuroticism = 0;

    bool operator==(const BigFive&) const = default;
};

struct Interaction {
    std::string item_id;
    std::int64_t timestamp = 0;  // epoch seconds
    InteractionKind kind = InteractionKind::unspecified;
    std::optional<double> rating_value;  // present iff kind == rating

    bool operator==(const Interaction&) const = default;
};

struct UserRecord {
    std::string user_id;
    std::optional<int> age;
    std::optional<Gender> gender;
    std::optional<double> curiosity;  // CEI-II scale score
    std::optional<BigFive> big_five;
    std::vector<Interaction> history;  // sorted oldest -> newest

    bool operator==(const UserRecord&) const = default;
};

struct ItemRecord {
    std::string item_id;
    std::string title;
    std::vector<std::string> genres;  // may be empty, never "absent"
    std::optional<std::string> description;
    std::optional<double> popularity_raw;  // domain-dependent, see features

    bool operator==(const ItemRecord&) const = default;
};

/// One (user, recommended item, ground-truth rating) triple. Interactions at
/// or after cutoff_timestamp are hidden from every evaluator for this case.
struct EvaluationCase {
    std::string user_id;
    std::string target_item_id;
    int ground_truth = 0;  // Likert 1..5
    std::int64_t cutoff_timestamp = 0;
    int case_index = -1;  // position in Dataset::cases

    bool operator==(const EvaluationCase&) const = default;
};

/// Immutable after load; safe for unrestricted concurrent reads.
struct Dataset {
    Domain domain = Domain::ecommerce;
    std::map<std::string, UserRecord> users;
    std::map<std::string, ItemRecord> items;
    std::vector<EvaluationCase> cases;

    const UserRecord& user(const std::string& id) const;
    const ItemRecord& item(const std::string& id) const;
};

/// Column mapping for one delimited file. `columns` maps field name ->
/// column header; optional fields are simply not listed.
struct TableSchema {
    std::string file;
    std::map<std::string, std::string> columns;
    std::vector<std::string> big_five_columns;        // users: exactly 5 when used
    std::vector<std::string> ground_truth_variables;  // cases: 3 Likert columns
};

struct DatasetSchema {
    Domain domain = Domain::ecommerce;
    char delimiter = '\t';
    char list_separator = '|';  // multi-valued cells (genres)
    TableSchema users;
    TableSchema items;
    TableSchema interactions;
    TableSchema cases;
};

DatasetSchema load_schema(const std::filesystem::path& manifest_path);

Dataset load_dataset(const std::filesystem::path& base_dir, const DatasetSchema& schema);

/// Reads the schema manifest, then the four tables it names (paths relative
/// to the manifest's directory).
Dataset load_dataset(const std::filesystem::path& manifest_path);

/// Ground truth for survey datasets without a direct serendipity rating:
/// round-half-up mean of three named Likert responses.
int derive_movie_ground_truth(const std::map<std::string, int>& responses,
                              const std::vector<std::string>& variable_names);

/// The at-most-k most recent interactions strictly before the case cutoff,
/// optionally restricted to `kinds`, returned oldest -> newest.
std::vector<Interaction> visible_history(
    const Dataset& dataset, const EvaluationCase& c, std::size_t k,
    const std::optional<std::set<InteractionKind>>& kinds = std::nullopt);

}  // namespace serendip
