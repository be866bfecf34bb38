#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kexp/estimation.hpp"
#include "kexp/mdp.hpp"

namespace kexp {

/// Normalized estimation loss c(s,a) n / T(s,a) per pair; +infinity for an
/// unvisited pair with c > 0, and 0 whenever c = 0.
struct PairLossTable {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::vector<double> values;
};

/// Complexities come from the true kernel. n must equal counts.total_steps().
PairLossTable pair_loss(const TransitionKernel& truth, const VisitCounts& counts, std::uint64_t n);

struct LossSummary {
    double worst = 0.0;
    double avg = 0.0;
    bool failed = false;
};

/// worst = max, avg = mean over all S A pairs, failed = any infinite entry.
LossSummary aggregate(const PairLossTable& losses);

struct TrialResult {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    LossSummary loss;
    /// Set when the trial threw; such trials count as failed.
    std::string error;
};

/// One CSV row: policy, env, n_trials, budget, failure_rate, worst_mean, avg_mean.
struct ReportSummary {
    std::string policy;
    std::string env;
    std::size_t n_trials = 0;
    std::uint64_t budget = 0;
    double failure_rate = 0.0;
    std::optional<double> worst_mean;
    std::optional<double> avg_mean;

    friend bool operator==(const ReportSummary&, const ReportSummary&) = default;
};

struct MetricsReport {
    std::string policy;
    std::string env;
    std::uint64_t budget = 0;
    std::vector<TrialResult> per_trial;
    double failure_rate = 0.0;
    /// Means over non-failed trials; empty when every trial failed.
    std::optional<double> worst_mean;
    std::optional<double> avg_mean;

    /// Aggregates trials sorted by index.
    static MetricsReport from_trials(std::string policy, std::string env, std::uint64_t budget,
                                     std::vector<TrialResult> trials);
    ReportSummary summary() const;
};

inline constexpr const char* kReportCsvHeader =
    "policy,env,n_trials,budget,failure_rate,worst_mean,avg_mean";

/// Writes the header and one row per report; missing means print as "--".
void write_report_csv(std::ostream& out, const std::vector<ReportSummary>& rows);
std::vector<ReportSummary> read_report_csv(std::istream& in);

/// Fixed-width comparison table: one row per policy, Failure / worst / avg
/// column groups per environment.
std::string emit_table(const std::vector<MetricsReport>& reports);

/// Least-squares slope of log(gap) against log(t) over the second half of the
/// history, ignoring non-positive gaps. Empty when fewer than two points remain.
std::optional<double> loglog_slope(const std::vector<std::pair<std::uint64_t, double>>& history);

/// Writes `t,gap` rows and returns the fitted slope.
std::optional<double> emit_convergence(std::ostream& out,
                                       const std::vector<std::pair<std::uint64_t, double>>& history);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace kexp
