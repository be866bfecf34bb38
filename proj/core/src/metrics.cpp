#include "kexp/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

std::string format_double(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return fmt::format("{}", value);
}

PairLossTable pair_loss(const TransitionKernel& truth, const VisitCounts& counts, std::uint64_t n) {
    if (truth.n_states() != counts.n_states() || truth.n_actions() != counts.n_actions()) {
        throw InputError("true kernel and counts differ in shape");
    }
    if (n != counts.total_steps()) {
        throw InputError(fmt::format("budget {} differs from recorded steps {}", n, counts.total_steps()));
    }
    PairLossTable table{truth.n_states(), truth.n_actions(), std::vector<double>(truth.n_pairs())};
    for (std::size_t p = 0; p < truth.n_pairs(); ++p) {
        const double c = intrinsic_complexity(truth.row(p));
        const std::uint64_t visits = counts.pair(p);
        if (c == 0.0) {
            table.values[p] = 0.0;
        } else if (visits == 0) {
            table.values[p] = std::numeric_limits<double>::infinity();
        } else {
            table.values[p] = c * static_cast<double>(n) / static_cast<double>(visits);
        }
    }
    return table;
}

LossSummary aggregate(const PairLossTable& losses) {
    LossSummary summary;
    if (losses.values.empty()) return summary;
    double total = 0.0;
    for (double v : losses.values) {
        if (std::isinf(v)) summary.failed = true;
        summary.worst = std::max(summary.worst, v);
        total += v;
    }
    if (summary.failed) {
        summary.worst = summary.avg = std::numeric_limits<double>::infinity();
    } else {
        summary.avg = total / static_cast<double>(losses.values.size());
    }
    return summary;
}

MetricsReport MetricsReport::from_trials(std::string policy, std::string env, std::uint64_t budget,
                                         std::vector<TrialResult> trials) {
    std::sort(trials.begin(), trials.end(),
              [](const TrialResult& a, const TrialResult& b) { return a.index < b.index; });
    MetricsReport report;
    report.policy = std::move(policy);
    report.env = std::move(env);
    report.budget = budget;
    std::size_t failed = 0, finite = 0;
    double worst_sum = 0.0, avg_sum = 0.0;
    for (const auto& trial : trials) {
        if (trial.loss.failed || !trial.error.empty()) {
            ++failed;
            continue;
        }
        ++finite;
        worst_sum += trial.loss.worst;
        avg_sum += trial.loss.avg;
    }
    report.failure_rate = trials.empty() ? 0.0 : static_cast<double>(failed) / static_cast<double>(trials.size());
    if (finite > 0) {
        report.worst_mean = worst_sum / static_cast<double>(finite);
        report.avg_mean = avg_sum / static_cast<double>(finite);
    }
    report.per_trial = std::move(trials);
    return report;
}

ReportSummary MetricsReport::summary() const {
    return {policy, env, per_trial.size(), budget, failure_rate, worst_mean, avg_mean};
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string quoted = "\"";
    for (char ch : s) {
        if (ch == '"') quoted += '"';
        quoted += ch;
    }
    return quoted + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    return fields;
}

std::string optional_field(const std::optional<double>& v) { return v ? format_double(*v) : "--"; }

double parse_number(const std::string& field) {
    double value = 0.0;
    const char* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, value);
    if (ec != std::errc() || ptr != end || field.empty()) {
        throw InputError("report CSV: bad number '" + field + "'");
    }
    return value;
}

std::optional<double> parse_optional(const std::string& field) {
    if (field == "--") return std::nullopt;
    return parse_number(field);
}

}  // namespace

void write_report_csv(std::ostream& out, const std::vector<ReportSummary>& rows) {
    out << kReportCsvHeader << '\n';
    for (const auto& row : rows) {
        out << csv_field(row.policy) << ',' << csv_field(row.env) << ',' << row.n_trials << ','
            << row.budget << ',' << format_double(row.failure_rate) << ',' << optional_field(row.worst_mean)
            << ',' << optional_field(row.avg_mean) << '\n';
    }
}

std::vector<ReportSummary> read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || boost::algorithm::trim_copy(line) != kReportCsvHeader) {
        throw InputError("report CSV: missing or unexpected header");
    }
    std::vector<ReportSummary> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 7) throw InputError("report CSV: expected 7 fields in '" + line + "'");
        ReportSummary row;
        row.policy = fields[0];
        row.env = fields[1];
        row.n_trials = static_cast<std::size_t>(parse_number(fields[2]));
        row.budget = static_cast<std::uint64_t>(parse_number(fields[3]));
        row.failure_rate = parse_number(fields[4]);
        row.worst_mean = parse_optional(fields[5]);
        row.avg_mean = parse_optional(fields[6]);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string emit_table(const std::vector<MetricsReport>& reports) {
    std::vector<std::string> envs, policies;
    std::map<std::pair<std::string, std::string>, const MetricsReport*> cell;
    for (const auto& r : reports) {
        if (std::find(envs.begin(), envs.end(), r.env) == envs.end()) envs.push_back(r.env);
        if (std::find(policies.begin(), policies.end(), r.policy) == policies.end()) {
            policies.push_back(r.policy);
        }
        cell[{r.policy, r.env}] = &r;
    }
    std::size_t name_width = 6;
    for (const auto& p : policies) name_width = std::max(name_width, p.size());

    std::ostringstream out;
    out << fmt::format("{:<{}}", "", name_width);
    for (const auto& env : envs) {
        std::string title = env;
        for (const auto& r : reports) {
            if (r.env == env) {
                title += fmt::format(" (n={})", r.budget);
                break;
            }
        }
        out << " | " << fmt::format("{:^34}", title);
    }
    out << '\n' << fmt::format("{:<{}}", "Policy", name_width);
    for (std::size_t i = 0; i < envs.size(); ++i) {
        out << " | " << fmt::format("{:>8} {:>12} {:>12}", "Failure", "L_Worst", "L_Avg");
    }
    out << '\n' << std::string(name_width + envs.size() * 37, '-') << '\n';
    for (const auto& policy : policies) {
        out << fmt::format("{:<{}}", policy, name_width);
        for (const auto& env : envs) {
            const auto it = cell.find({policy, env});
            if (it == cell.end()) {
                out << " | " << fmt::format("{:>8} {:>12} {:>12}", "", "", "");
                continue;
            }
            const MetricsReport& r = *it->second;
            const auto mean = [](const std::optional<double>& v) {
                return v ? fmt::format("{:.1f}", *v) : std::string("--");
            };
            out << " | "
                << fmt::format("{:>7.0f}% {:>12} {:>12}", 100.0 * r.failure_rate, mean(r.worst_mean),
                               mean(r.avg_mean));
        }
        out << '\n';
    }
    return out.str();
}

std::optional<double> loglog_slope(const std::vector<std::pair<std::uint64_t, double>>& history) {
    std::vector<std::pair<double, double>> points;
    for (std::size_t i = history.size() / 2; i < history.size(); ++i) {
        const auto [t, gap] = history[i];
        if (gap > 0.0 && t > 0) points.emplace_back(std::log(static_cast<double>(t)), std::log(gap));
    }
    if (points.size() < 2) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : points) {
        mx += x;
        my += y;
    }
    mx /= static_cast<double>(points.size());
    my /= static_cast<double>(points.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : points) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if (sxx == 0.0) return std::nullopt;
    return sxy / sxx;
}

std::optional<double> emit_convergence(std::ostream& out,
                                       const std::vector<std::pair<std::uint64_t, double>>& history) {
    out << "t,gap\n";
    for (const auto& [t, gap] : history) out << t << ',' << format_double(gap) << '\n';
    return loglog_slope(history);
}

}  // namespace kexp
