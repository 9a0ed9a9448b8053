#include "serendip/meta_eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace serendip::meta {

namespace {

void check_lengths(std::span<const double> pred, std::span<const double> truth,
                   std::size_t min_len, const char* op) {
    if (pred.size() != truth.size())
        throw std::invalid_argument(std::string(op) + ": length mismatch (" +
                                    std::to_string(pred.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    if (pred.size() < min_len)
        throw std::invalid_argument(std::string(op) + ": need at least " +
                                    std::to_string(min_len) + " elements");
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth, 1, "mae");
    double sum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        sum += std::abs(pred[i] - truth[i]);
    return sum / static_cast<double>(pred.size());
}

double rmse(std::span<const double> pred, std::span<const double> truth) {
    check_lengths(pred, truth, 1, "rmse");
    double sum = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(pred.size()));
}

PearsonResult pearson(std::span<const double> pred,
                      std::span<const double> truth) {
    check_lengths(pred, truth, 2, "pearson");
    const auto n = static_cast<double>(pred.size());

    double mean_p = 0, mean_t = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        mean_p += pred[i];
        mean_t += truth[i];
    }
    mean_p /= n;
    mean_t /= n;

    double cov = 0, var_p = 0, var_t = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double dp = pred[i] - mean_p;
        const double dt = truth[i] - mean_t;
        cov += dp * dt;
        var_p += dp * dp;
        var_t += dt * dt;
    }
    if (var_p == 0.0 || var_t == 0.0) return {0.0, true};
    const double r = cov / std::sqrt(var_p * var_t);
    return {std::clamp(r, -1.0, 1.0), false};
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (a <= 0 || b <= 0)
        throw std::invalid_argument("regularized_incomplete_beta: a, b must be > 0");
    if (x < 0 || x > 1)
        throw std::invalid_argument("regularized_incomplete_beta: x must be in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;

    // Lentz's continued fraction for the incomplete beta function.
    const auto continued_fraction = [](double aa, double bb, double xx) {
        constexpr int kMaxIter = 300;
        constexpr double kEps = 1e-15;
        constexpr double kTiny = 1e-300;

        const double qab = aa + bb;
        const double qap = aa + 1.0;
        const double qam = aa - 1.0;
        double c = 1.0;
        double d = 1.0 - qab * xx / qap;
        if (std::abs(d) < kTiny) d = kTiny;
        d = 1.0 / d;
        double h = d;
        for (int m = 1; m <= kMaxIter; ++m) {
            const double m2 = 2.0 * m;
            double num = m * (bb - m) * xx / ((qam + m2) * (aa + m2));
            d = 1.0 + num * d;
            if (std::abs(d) < kTiny) d = kTiny;
            c = 1.0 + num / c;
            if (std::abs(c) < kTiny) c = kTiny;
            d = 1.0 / d;
            h *= d * c;
            num = -(aa + m) * (qab + m) * xx / ((aa + m2) * (qap + m2));
            d = 1.0 + num * d;
            if (std::abs(d) < kTiny) d = kTiny;
            c = 1.0 + num / c;
            if (std::abs(c) < kTiny) c = kTiny;
            d = 1.0 / d;
            const double delta = d * c;
            h *= delta;
            if (std::abs(delta - 1.0) < kEps) break;
        }
        return h;
    };

    const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                             std::lgamma(b) + a * std::log(x) +
                             b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * continued_fraction(a, b, x) / a;
    return 1.0 - front * continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0) throw std::invalid_argument("student_t_two_sided_p: dof <= 0");
    if (!std::isfinite(t)) return 0.0;
    const double x = dof / (dof + t * t);
    return regularized_incomplete_beta(dof / 2.0, 0.5, x);
}

TTestResult significance_test(std::span<const double> errors_a,
                              std::span<const double> errors_b) {
    check_lengths(errors_a, errors_b, 2, "significance_test");
    const auto n = static_cast<double>(errors_a.size());

    double mean_d = 0;
    for (std::size_t i = 0; i < errors_a.size(); ++i)
        mean_d += errors_a[i] - errors_b[i];
    mean_d /= n;

    double ss = 0;
    for (std::size_t i = 0; i < errors_a.size(); ++i) {
        const double d = (errors_a[i] - errors_b[i]) - mean_d;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));

    if (sd == 0.0) {
        // No per-case variation: identical errors get the conventional
        // (0, 1); a constant nonzero shift has no finite t.
        if (mean_d == 0.0) return {0.0, 1.0, true};
        return {std::nan(""), std::nan(""), true};
    }

    const double t = mean_d / (sd / std::sqrt(n));
    return {t, student_t_two_sided_p(t, n - 1.0), false};
}

std::vector<int> random_baseline(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("random_baseline: n must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<int> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(1 + static_cast<int>(rng() % 5));
    return out;
}

namespace {

// p-value of observing |r| under the null of zero correlation.
double pearson_p_value(double r, std::size_t n) {
    if (n < 3) return 1.0;
    const double dof = static_cast<double>(n) - 2.0;
    const double denom = 1.0 - r * r;
    if (denom <= 0.0) return 0.0;
    const double t = r * std::sqrt(dof / denom);
    return student_t_two_sided_p(t, dof);
}

PerUserAggregate per_user_aggregate(std::span<const double> scores,
                                    std::span<const EvaluationCase> cases) {
    std::map<std::string, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < cases.size(); ++i)
        by_user[cases[i].user_id].push_back(i);

    PerUserAggregate agg;
    double mae_sum = 0, rmse_sum = 0, r_sum = 0;
    for (const auto& [uid, idxs] : by_user) {
        std::vector<double> pred, truth;
        pred.reserve(idxs.size());
        truth.reserve(idxs.size());
        for (const std::size_t i : idxs) {
            pred.push_back(scores[i]);
            truth.push_back(cases[i].ground_truth);
        }
        mae_sum += mae(pred, truth);
        rmse_sum += rmse(pred, truth);
        agg.users += 1;
        if (pred.size() >= 2) {
            const PearsonResult r = pearson(pred, truth);
            if (!r.degenerate) {
                r_sum += r.r;
                agg.users_with_pearson += 1;
            }
        }
    }
    if (agg.users > 0) {
        agg.mae = mae_sum / agg.users;
        agg.rmse = rmse_sum / agg.users;
    }
    if (agg.users_with_pearson > 0) {
        agg.pearson_pct = 100.0 * r_sum / agg.users_with_pearson;
        agg.pearson_defined = true;
    }
    return agg;
}

}  // namespace

MethodReport evaluate_method(std::span<const double> scores,
                             std::span<const EvaluationCase> cases,
                             const std::string& method_id, int parse_failures) {
    if (scores.size() != cases.size())
        throw std::invalid_argument(
            "evaluate_method: scores not aligned with cases (" +
            std::to_string(scores.size()) + " vs " + std::to_string(cases.size()) +
            ")");
    std::vector<double> truth;
    truth.reserve(cases.size());
    for (const EvaluationCase& c : cases)
        truth.push_back(static_cast<double>(c.ground_truth));

    MethodReport entry;
    entry.method_id = method_id;
    entry.n = scores.size();
    entry.parse_failures = parse_failures;
    entry.mae = mae(scores, truth);
    entry.rmse = rmse(scores, truth);

    const PearsonResult r = pearson(scores, truth);
    entry.degenerate = r.degenerate;
    if (!r.degenerate) {
        entry.pearson_pct = 100.0 * r.r;
        entry.pearson_p_value = pearson_p_value(r.r, scores.size());
    } else {
        entry.pearson_pct = std::nan("");
        entry.pearson_p_value = std::nan("");
    }

    entry.per_user = per_user_aggregate(scores, cases);
    return entry;
}

MethodReport evaluate_method(std::span<const double> scores,
                             const Dataset& dataset, const std::string& method_id,
                             int parse_failures) {
    return evaluate_method(scores, dataset.cases, method_id, parse_failures);
}

namespace {

nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

}  // namespace

nlohmann::json MetaEvalReport::to_json() const {
    nlohmann::json entries_json = nlohmann::json::array();
    for (const MethodReport& e : entries) {
        nlohmann::json j = {
            {"method_id", e.method_id},
            {"pearson_pct", number_or_null(e.pearson_pct)},
            {"pearson_p_value", number_or_null(e.pearson_p_value)},
            {"mae", e.mae},
            {"rmse", e.rmse},
            {"n", e.n},
            {"parse_failures", e.parse_failures},
            {"degenerate", e.degenerate},
            {"per_user",
             {{"pearson_pct", e.per_user.pearson_defined
                                  ? nlohmann::json(e.per_user.pearson_pct)
                                  : nlohmann::json(nullptr)},
              {"mae", e.per_user.mae},
              {"rmse", e.per_user.rmse},
              {"users", e.per_user.users},
              {"users_with_pearson", e.per_user.users_with_pearson}}},
        };
        if (!e.ensemble_members.empty()) j["members"] = e.ensemble_members;
        entries_json.push_back(std::move(j));
    }

    nlohmann::json sig_json = nlohmann::json::array();
    for (const PairwiseSignificance& s : significance)
        sig_json.push_back({{"method_a", s.method_a},
                            {"method_b", s.method_b},
                            {"t_statistic", number_or_null(s.t_statistic)},
                            {"p_value", number_or_null(s.p_value)},
                            {"degenerate", s.degenerate}});

    return {{"entries", std::move(entries_json)},
            {"significance", std::move(sig_json)},
            {"config_digest", config_digest},
            {"dataset_digest", dataset_digest}};
}

std::string MetaEvalReport::to_table() const { return render_table(to_json()); }

std::string MetaEvalReport::render_table(const nlohmann::json& report) {
    std::ostringstream out;
    const auto cell = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", v);
        return std::string(buf);
    };

    std::size_t name_width = std::string("Method").size();
    for (const auto& e : report.at("entries"))
        name_width =
            std::max(name_width, e.at("method_id").get<std::string>().size());

    out << std::string(name_width, ' ') << "  Pearson(%)      MAE     RMSE   n\n";
    for (const auto& e : report.at("entries")) {
        const std::string name = e.at("method_id").get<std::string>();
        out << name << std::string(name_width - name.size(), ' ') << "  ";
        if (e.at("degenerate").get<bool>()) {
            out << "degenerate";
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%10.4f",
                          e.at("pearson_pct").get<double>());
            out << buf;
        }
        out << "  " << cell(e.at("mae").get<double>()) << "  "
            << cell(e.at("rmse").get<double>()) << "  "
            << e.at("n").get<std::size_t>();
        if (const int pf = e.at("parse_failures").get<int>(); pf > 0)
            out << "  (parse failures: " << pf << ")";
        out << "\n";
    }

    const auto& sig = report.at("significance");
    if (!sig.empty()) {
        out << "\nPaired t-tests on absolute errors (two-sided):\n";
        for (const auto& s : sig) {
            out << "  " << s.at("method_a").get<std::string>() << " vs "
                << s.at("method_b").get<std::string>() << ": ";
            if (s.at("degenerate").get<bool>() &&
                s.at("p_value").is_null()) {
                out << "degenerate";
            } else {
                out << "t=" << cell(s.at("t_statistic").get<double>())
                    << ", p=" << cell(s.at("p_value").get<double>());
                if (s.at("degenerate").get<bool>()) out << " (degenerate)";
            }
            out << "\n";
        }
    }
    return out.str();
}

}  // namespace serendip::meta
