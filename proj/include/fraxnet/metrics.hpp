#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "fraxnet/error.hpp"

namespace fraxnet {

/// Counts for the binary task; fractured is the positive class.
struct ConfusionMatrix {
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tp = 0;

    std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
    std::uint64_t support_non_fractured() const noexcept { return tn + fp; }
    std::uint64_t support_fractured() const noexcept { return tp + fn; }

    void add(int label, int prediction)
    {
        if ((label != 0 && label != 1) || (prediction != 0 && prediction != 1))
            throw ValueError("labels and predictions must be 0 or 1");
        if (label == 1)
            prediction == 1 ? ++tp : ++fn;
        else
            prediction == 1 ? ++fp : ++tn;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels)
{
    if (predictions.size() != labels.size())
        throw ValueError("confusion: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(labels.size()) + " labels");
    if (predictions.empty()) throw ValueError("confusion: no predictions");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) cm.add(labels[i], predictions[i]);
    return cm;
}

/// floor(x * 10^digits + 0.5) / 10^digits. A tiny relative nudge keeps values
/// like 0.125 (stored as 0.12499999...) rounding up as written.
inline double round_half_up(double x, int digits)
{
    const double scale = std::pow(10.0, digits);
    return std::floor(x * scale * (1.0 + 1e-12) + 0.5) / scale;
}

struct MetricValue {
    double value = 0.0;  // rounded half-up to 4 decimals
    bool degenerate = false;  // zero denominator; value forced to 0

    friend bool operator==(const MetricValue&, const MetricValue&) = default;
};

struct ClassMetrics {
    MetricValue precision;
    MetricValue recall;
    MetricValue f1;
    std::uint64_t support = 0;

    friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct ClassificationReport {
    ConfusionMatrix cm;
    ClassMetrics non_fractured;
    ClassMetrics fractured;
    MetricValue accuracy;
    MetricValue misclassification_rate;

    friend bool operator==(const ClassificationReport&, const ClassificationReport&) = default;
};

namespace detail {

inline MetricValue ratio(std::uint64_t num, std::uint64_t den)
{
    if (den == 0) return {0.0, true};
    return {round_half_up(static_cast<double>(num) / static_cast<double>(den), 4), false};
}

// F1 = 2*correct / (2*correct + wrong_predicted + missed), exact in integers.
inline MetricValue f1(std::uint64_t correct, std::uint64_t false_alarm, std::uint64_t missed)
{
    return ratio(2 * correct, 2 * correct + false_alarm + missed);
}

}  // namespace detail

/// Per-class precision/recall/F1, accuracy and misclassification rate from a
/// confusion matrix. Undefined ratios are reported as 0 with a flag.
inline ClassificationReport report(const ConfusionMatrix& cm)
{
    ClassificationReport r;
    r.cm = cm;
    r.fractured.precision = detail::ratio(cm.tp, cm.tp + cm.fp);
    r.fractured.recall = detail::ratio(cm.tp, cm.tp + cm.fn);
    r.fractured.f1 = detail::f1(cm.tp, cm.fp, cm.fn);
    r.fractured.support = cm.support_fractured();
    r.non_fractured.precision = detail::ratio(cm.tn, cm.tn + cm.fn);
    r.non_fractured.recall = detail::ratio(cm.tn, cm.tn + cm.fp);
    r.non_fractured.f1 = detail::f1(cm.tn, cm.fn, cm.fp);
    r.non_fractured.support = cm.support_non_fractured();
    r.accuracy = detail::ratio(cm.tn + cm.tp, cm.total());
    r.misclassification_rate = detail::ratio(cm.fp + cm.fn, cm.total());
    return r;
}

enum class ReportFormat { text, json };

namespace detail {

inline std::string fixed(double v, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, round_half_up(v, digits));
    return buf;
}

inline std::string flagged(const MetricValue& m)
{
    return fixed(m.value, 2) + (m.degenerate ? "*" : " ");
}

inline void put_class(nlohmann::ordered_json& j, const std::string& prefix, const ClassMetrics& c)
{
    j[prefix + ".precision"] = c.precision.value;
    j[prefix + ".precision_degenerate"] = c.precision.degenerate;
    j[prefix + ".recall"] = c.recall.value;
    j[prefix + ".recall_degenerate"] = c.recall.degenerate;
    j[prefix + ".f1"] = c.f1.value;
    j[prefix + ".f1_degenerate"] = c.f1.degenerate;
    j[prefix + ".support"] = c.support;
}

inline MetricValue get_metric(const nlohmann::json& j, const std::string& key)
{
    return {j.at(key).get<double>(), j.at(key + "_degenerate").get<bool>()};
}

inline ClassMetrics get_class(const nlohmann::json& j, const std::string& prefix)
{
    return {get_metric(j, prefix + ".precision"), get_metric(j, prefix + ".recall"), get_metric(j, prefix + ".f1"),
            j.at(prefix + ".support").get<std::uint64_t>()};
}

}  // namespace detail

/// Text mirrors a per-class results table (2-decimal display, accuracy as a
/// percentage). JSON is a flat key/value object carrying the 4-decimal values,
/// degenerate flags and raw counts.
inline std::string write_report(const ClassificationReport& r, ReportFormat format)
{
    if (format == ReportFormat::json) {
        nlohmann::ordered_json j;
        j["format"] = "fraxnet-report-1";
        j["tn"] = r.cm.tn;
        j["fp"] = r.cm.fp;
        j["fn"] = r.cm.fn;
        j["tp"] = r.cm.tp;
        j["accuracy"] = r.accuracy.value;
        j["accuracy_degenerate"] = r.accuracy.degenerate;
        j["misclassification_rate"] = r.misclassification_rate.value;
        j["misclassification_rate_degenerate"] = r.misclassification_rate.degenerate;
        detail::put_class(j, "non_fractured", r.non_fractured);
        detail::put_class(j, "fractured", r.fractured);
        return j.dump(2) + "\n";
    }

    auto row = [](std::string_view name, const ClassMetrics& c) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%-16s %10s %8s %9s %8llu\n", std::string(name).c_str(),
                      detail::flagged(c.precision).c_str(), detail::flagged(c.recall).c_str(),
                      detail::flagged(c.f1).c_str(), static_cast<unsigned long long>(c.support));
        return std::string(buf);
    };
    std::string out;
    out += "Class             Precision   Recall  F1-score  Support\n";
    out += row("non_fractured", r.non_fractured);
    out += row("fractured", r.fractured);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-16s %29s%% %8llu\n", "accuracy",
                  detail::fixed(r.accuracy.value * 100.0, 2).c_str(), static_cast<unsigned long long>(r.cm.total()));
    out += buf;
    std::snprintf(buf, sizeof buf, "%-16s %29s%%\n", "misclassified",
                  detail::fixed(r.misclassification_rate.value * 100.0, 2).c_str());
    out += buf;
    std::snprintf(buf, sizeof buf, "confusion: tn=%llu fp=%llu fn=%llu tp=%llu\n",
                  static_cast<unsigned long long>(r.cm.tn), static_cast<unsigned long long>(r.cm.fp),
                  static_cast<unsigned long long>(r.cm.fn), static_cast<unsigned long long>(r.cm.tp));
    out += buf;
    if (r.fractured.precision.degenerate || r.fractured.recall.degenerate || r.fractured.f1.degenerate ||
        r.non_fractured.precision.degenerate || r.non_fractured.recall.degenerate || r.non_fractured.f1.degenerate)
        out += "* undefined (zero denominator), reported as 0\n";
    return out;
}

inline ClassificationReport parse_report(std::string_view json_text)
{
    try {
        const auto j = nlohmann::json::parse(json_text);
        if (j.at("format").get<std::string>() != "fraxnet-report-1") throw FormatError("unknown report format");
        ClassificationReport r;
        r.cm = {j.at("tn").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(), j.at("fn").get<std::uint64_t>(),
                j.at("tp").get<std::uint64_t>()};
        r.accuracy = detail::get_metric(j, "accuracy");
        r.misclassification_rate = detail::get_metric(j, "misclassification_rate");
        r.non_fractured = detail::get_class(j, "non_fractured");
        r.fractured = detail::get_class(j, "fractured");
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed report: ") + e.what());
    }
}

}  // namespace fraxnet
