#include "tablesim/eval.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <stdexcept>

#include "tablesim/digest.hpp"

namespace tablesim {

void SdcgParams::validate() const
{
    if (!(doc_log_base > 1.0) || !(query_log_base > 1.0)) {
        throw InputError("sDCG log bases must be > 1");
    }
}

double sdcg(const SessionGains &per_query_gains, const SdcgParams &params)
{
    params.validate();
    const double ln_b = std::log(params.doc_log_base);
    const double ln_bq = std::log(params.query_log_base);
    double total = 0.0;
    for (std::size_t j = 0; j < per_query_gains.size(); ++j) {
        double query_discount = 1.0 + std::log(static_cast<double>(j + 1)) / ln_bq;
        for (std::size_t i = 0; i < per_query_gains[j].size(); ++i) {
            double g = per_query_gains[j][i];
            if (g == 0.0) {
                continue;
            }
            double rank_discount = 1.0 + std::log(static_cast<double>(i + 1)) / ln_b;
            total += g / (query_discount * rank_discount);
        }
    }
    return total;
}

void validate_session_log(const SessionLog &log)
{
    auto fail = [&](std::size_t idx, const std::string &why) {
        const auto &a = log.actions[idx];
        throw InputError("malformed session log for topic '" + log.topic_id + "': action #" + std::to_string(idx + 1) +
                         " (" + std::string(action_kind_name(a.kind)) + " '" + a.subject + "'): " + why);
    };
    bool in_query = false;
    double prev_t = 0.0;
    long long sum = 0;
    std::set<std::string> credited;
    for (std::size_t k = 0; k < log.actions.size(); ++k) {
        const auto &a = log.actions[k];
        const Action *prev = k > 0 ? &log.actions[k - 1] : nullptr;
        if (a.gain < 0) {
            fail(k, "negative gain");
        }
        if (a.gain > 0 && a.kind != ActionKind::JudgeTable) {
            fail(k, "gain on a non-judgment action");
        }
        if (a.kind == ActionKind::StopSession) {
            if (k + 1 != log.actions.size()) {
                fail(k, "StopSession is not the last action");
            }
            if (a.elapsed < prev_t) {
                fail(k, "time decreases");
            }
        } else if (!(a.elapsed > prev_t)) {
            fail(k, "elapsed time does not strictly increase");
        }
        switch (a.kind) {
        case ActionKind::IssueQuery:
            in_query = true;
            break;
        case ActionKind::ExamineSnippet:
            if (!in_query) {
                fail(k, "snippet examined before any query");
            }
            break;
        case ActionKind::ClickTable:
            if (prev == nullptr || prev->kind != ActionKind::ExamineSnippet || prev->subject != a.subject) {
                fail(k, "click does not follow the examination of the same table");
            }
            break;
        case ActionKind::JudgeTable:
            if (prev == nullptr || prev->kind != ActionKind::ClickTable || prev->subject != a.subject) {
                fail(k, "judgment does not follow a click on the same table");
            }
            if (a.gain > 0 && !credited.insert(a.subject).second) {
                fail(k, "gain credited twice for the same table");
            }
            break;
        case ActionKind::StopSession:
            break;
        }
        sum += a.gain;
        prev_t = a.elapsed;
    }
    if (log.actions.empty() || log.actions.back().kind != ActionKind::StopSession) {
        throw InputError("malformed session log for topic '" + log.topic_id + "': missing final StopSession");
    }
    if (sum != log.total_gain) {
        throw InputError("malformed session log for topic '" + log.topic_id + "': summary total_gain " +
                         std::to_string(log.total_gain) + " differs from the sum of gains " + std::to_string(sum));
    }
}

SessionGains session_gains(const SessionLog &log)
{
    validate_session_log(log);
    SessionGains gains;
    for (const auto &a : log.actions) {
        switch (a.kind) {
        case ActionKind::IssueQuery:
            gains.emplace_back();
            break;
        case ActionKind::ExamineSnippet:
            gains.back().push_back(0.0);
            break;
        case ActionKind::JudgeTable:
            gains.back().back() = static_cast<double>(a.gain);
            break;
        default:
            break;
        }
    }
    return gains;
}

GainCurve sdcg_curve(const SessionLog &log, const SdcgParams &params)
{
    auto gains = session_gains(log);
    GainCurve curve;
    SessionGains prefix;
    for (std::size_t q = 0; q < gains.size(); ++q) {
        prefix.push_back(gains[q]);
        curve.points.push_back({static_cast<double>(q + 1), sdcg(prefix, params)});
    }
    return curve;
}

GainCurve time_gain_curve(const SessionLog &log)
{
    validate_session_log(log);
    GainCurve curve;
    double cumulative = 0.0;
    for (const auto &a : log.actions) {
        cumulative += a.gain;
        if (!curve.points.empty() && curve.points.back().x == a.elapsed) {
            curve.points.back().y = cumulative;
        } else {
            curve.points.push_back({a.elapsed, cumulative});
        }
    }
    return curve;
}

double evaluate_step(const GainCurve &curve, double x)
{
    double y = 0.0;
    for (const auto &p : curve.points) {
        if (p.x > x) {
            break;
        }
        y = p.y;
    }
    return y;
}

GainCurve AggregateCurve::means() const
{
    GainCurve c;
    c.points.reserve(points.size());
    for (const auto &p : points) {
        c.points.push_back({p.x, p.mean});
    }
    return c;
}

AggregateCurve mean_curve(std::span<const GainCurve> curves, std::span<const double> checkpoints)
{
    if (curves.empty()) {
        throw std::invalid_argument("mean_curve: no curves to aggregate");
    }
    for (std::size_t i = 1; i < checkpoints.size(); ++i) {
        if (!(checkpoints[i] > checkpoints[i - 1])) {
            throw std::invalid_argument("mean_curve: checkpoints must be strictly increasing");
        }
    }
    AggregateCurve out;
    out.points.reserve(checkpoints.size());
    const auto n = static_cast<double>(curves.size());
    for (double x : checkpoints) {
        std::vector<double> values;
        values.reserve(curves.size());
        double sum = 0.0;
        for (const auto &c : curves) {
            values.push_back(evaluate_step(c, x));
            sum += values.back();
        }
        double mean = sum / n;
        double ss = 0.0;
        for (double v : values) {
            ss += (v - mean) * (v - mean);
        }
        double sd = curves.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        out.points.push_back({x, mean, curves.size(), sd});
    }
    return out;
}

std::vector<double> query_checkpoints(std::size_t max_queries)
{
    std::vector<double> out;
    for (std::size_t q = 1; q <= max_queries; ++q) {
        out.push_back(static_cast<double>(q));
    }
    return out;
}

std::vector<double> time_checkpoints(double horizon, double step)
{
    if (!(step > 0.0) || !(horizon >= 0.0)) {
        throw std::invalid_argument("time_checkpoints: step must be > 0 and horizon >= 0");
    }
    std::vector<double> out;
    for (std::size_t i = 0;; ++i) {
        double x = static_cast<double>(i) * step;
        out.push_back(x);
        if (x >= horizon) {
            break;
        }
    }
    return out;
}

std::string curve_csv(const AggregateCurve &curve)
{
    std::string out = "x,mean,n,stddev\n";
    for (const auto &p : curve.points) {
        out += format_double(p.x);
        out.push_back(',');
        out += format_double(p.mean);
        out.push_back(',');
        out += std::to_string(p.n);
        out.push_back(',');
        out += format_double(p.stddev);
        out.push_back('\n');
    }
    return out;
}

namespace {

template <typename T>
T parse_number(std::string_view field, const std::string &where)
{
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw InputError(where + "bad number '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

AggregateCurve parse_curve_csv(std::string_view text, const std::string &source)
{
    AggregateCurve curve;
    std::size_t pos = 0;
    std::size_t lineno = 0;
    bool header = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        auto where = source + ":" + std::to_string(lineno) + ": ";
        if (!header) {
            if (line != "x,mean,n,stddev") {
                throw InputError(where + "expected header 'x,mean,n,stddev'");
            }
            header = true;
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) {
                break;
            }
            start = comma + 1;
        }
        if (fields.size() != 4) {
            throw InputError(where + "expected 4 fields");
        }
        curve.points.push_back({parse_number<double>(fields[0], where), parse_number<double>(fields[1], where),
                                parse_number<std::size_t>(fields[2], where), parse_number<double>(fields[3], where)});
    }
    if (!header) {
        throw InputError(source + ": empty curve file");
    }
    return curve;
}

}  // namespace tablesim
