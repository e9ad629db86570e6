#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tablesim/simulator.hpp"

namespace tablesim {

/// Logarithm bases of the rank and query discounts.
struct SdcgParams {
    double doc_log_base = 2.0;
    double query_log_base = 4.0;

    void validate() const;
};

/// Gains indexed [query][rank], both 0-based here and 1-based in the discount.
using SessionGains = std::vector<std::vector<double>>;

/// Sum of gain(j, i) / ((1 + log_bq j) * (1 + log_b i)).
double sdcg(const SessionGains &per_query_gains, const SdcgParams &params = {});

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const CurvePoint &) const = default;
};

/// x strictly increasing, y non-decreasing.
struct GainCurve {
    std::vector<CurvePoint> points;

    bool operator==(const GainCurve &) const = default;
};

/// Throws InputError naming the first action that breaks the log grammar.
void validate_session_log(const SessionLog &log);

/// Per-query gain vectors read from JudgeTable actions; rank = snippet position within the query.
SessionGains session_gains(const SessionLog &log);

/// Point q holds sdcg over the first q queries.
GainCurve sdcg_curve(const SessionLog &log, const SdcgParams &params = {});
/// One point per distinct elapsed time: (seconds, cumulative gain).
GainCurve time_gain_curve(const SessionLog &log);

/// Step evaluation: value of the last point at or before x, 0 before the first point.
double evaluate_step(const GainCurve &curve, double x);

struct AggregatePoint {
    double x = 0.0;
    double mean = 0.0;
    std::size_t n = 0;
    double stddev = 0.0;  // sample standard deviation; 0 when n == 1

    bool operator==(const AggregatePoint &) const = default;
};

struct AggregateCurve {
    std::vector<AggregatePoint> points;

    [[nodiscard]] GainCurve means() const;
    bool operator==(const AggregateCurve &) const = default;
};

AggregateCurve mean_curve(std::span<const GainCurve> curves, std::span<const double> checkpoints);

/// 1, 2, ..., max_queries.
std::vector<double> query_checkpoints(std::size_t max_queries);
/// 0, step, 2*step, ... up to and including the first value >= horizon.
std::vector<double> time_checkpoints(double horizon, double step = 10.0);

/// "x,mean,n,stddev" header, one row per checkpoint.
std::string curve_csv(const AggregateCurve &curve);
AggregateCurve parse_curve_csv(std::string_view text, const std::string &source = "<csv>");

}  // namespace tablesim
