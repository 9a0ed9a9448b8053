#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "serendip/data_model.hpp"

namespace serendip::meta {

double mae(std::span<const double> pred, std::span<const double> truth);
double rmse(std::span<const double> pred, std::span<const double> truth);

struct PearsonResult {
    double r = 0.0;
    bool degenerate = false;  // zero variance in either vector
};

/// Sample Pearson correlation; needs length >= 2. A constant predictor (or
/// constant truth) is flagged degenerate instead of being silently zeroed.
PearsonResult pearson(std::span<const double> pred, std::span<const double> truth);

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;  // zero-variance difference vector
};

/// Paired two-sided t-test on per-case absolute errors. Identical inputs
/// return t = 0, p = 1 with the degenerate flag set.
TTestResult significance_test(std::span<const double> errors_a,
                              std::span<const double> errors_b);

/// I_x(a, b), computed with a Lentz continued fraction. Exposed because the
/// Student-t p-values below are defined through it and it is independently
/// checkable against quadrature.
double regularized_incomplete_beta(double a, double b, double x);

/// Two-sided p-value for a Student-t statistic with `dof` degrees of freedom.
double student_t_two_sided_p(double t, double dof);

/// Seeded uniform Likert draws in {1..5}; the no-signal reference method.
std::vector<int> random_baseline(std::size_t n, std::uint64_t seed);

struct PerUserAggregate {
    double pearson_pct = 0.0;  // mean of per-user correlations, in percent
    bool pearson_defined = false;
    double mae = 0.0;
    double rmse = 0.0;
    int users = 0;              // users contributing to mae/rmse
    int users_with_pearson = 0; // users with >= 2 cases and non-degenerate r
};

struct MethodReport {
    std::string method_id;
    double pearson_pct = 0.0;  // in percent, matching the usual table layout
    double pearson_p_value = 1.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::size_t n = 0;
    int parse_failures = 0;
    bool degenerate = false;
    PerUserAggregate per_user;
    std::vector<std::string> ensemble_members;  // empty for plain methods
};

/// Pooled Pearson/MAE/RMSE for one score vector against the cases' ground
/// truth, plus the user-averaged variant of each metric.
MethodReport evaluate_method(std::span<const double> scores,
                             std::span<const EvaluationCase> cases,
                             const std::string& method_id,
                             int parse_failures = 0);

MethodReport evaluate_method(std::span<const double> scores, const Dataset& dataset,
                             const std::string& method_id, int parse_failures = 0);

struct PairwiseSignificance {
    std::string method_a;
    std::string method_b;
    double t_statistic = 0.0;
    double p_value = 1.0;
    bool degenerate = false;
};

struct MetaEvalReport {
    std::vector<MethodReport> entries;
    std::vector<PairwiseSignificance> significance;
    std::string config_digest;
    std::string dataset_digest;

    nlohmann::json to_json() const;
    std::string to_table() const;

    static std::string render_table(const nlohmann::json& report);
};

}  // namespace serendip::meta
