#include "cirparse/param_accounting.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cirparse {

ClassifierCount count_classifier(Variant variant, std::uint64_t n, std::uint64_t m, std::uint64_t labels) {
  if (n == 0 || m == 0 || labels == 0) throw std::invalid_argument("count_classifier: dimensions must be >= 1");
  switch (variant) {
    case Variant::Dense:
      return {n * n + n, labels * (m * m + 2 * m + 1)};
    case Variant::Symmetric:
      return {n + 2 * n, labels * (m + 2 * m)};
    case Variant::Circulant:
      // complex spectrum stored as 2n reals, plus the 2n concatenated bias
      return {2 * n + 2 * n, labels * (2 * m + 2 * m)};
  }
  throw std::invalid_argument("count_classifier: unknown variant");
}

std::vector<SharedComponent> default_shared_components() {
  return {{"CharLSTM", 241200}, {"BiLSTM", 1927200}, {"Arc MLP", 320800},
          {"Label MLP", 80200}, {"Others", 50400}};
}

const VariantReport& ParamReport::at(Variant v) const {
  for (const auto& r : variants)
    if (r.variant == v) return r;
  throw std::out_of_range("ParamReport: variant missing");
}

ParamReport reduction_report(const std::vector<SharedComponent>& shared, std::uint64_t n,
                             std::uint64_t m, std::uint64_t labels) {
  ParamReport report;
  for (const auto& c : shared) report.shared_total += c.parameters;
  std::uint64_t baseline = 0;
  for (Variant v : {Variant::Dense, Variant::Symmetric, Variant::Circulant}) {
    VariantReport r;
    r.variant = v;
    r.classifiers = count_classifier(v, n, m, labels);
    r.total = report.shared_total + r.classifiers.total();
    if (v == Variant::Dense) baseline = r.total;
    r.delta_vs_dense = (static_cast<double>(r.total) - static_cast<double>(baseline)) /
                       static_cast<double>(baseline) * 100.0;
    const auto pct = [&](std::uint64_t x) {
      return r.total == 0 ? 0.0 : 100.0 * static_cast<double>(x) / static_cast<double>(r.total);
    };
    for (const auto& c : shared) r.rows.push_back({c.name, c.parameters, pct(c.parameters)});
    r.rows.push_back({"Arc Classifier", r.classifiers.arc, pct(r.classifiers.arc)});
    r.rows.push_back({"Label Classifier", r.classifiers.label, pct(r.classifiers.label)});
    report.variants.push_back(std::move(r));
  }
  return report;
}

ParamReport reduction_report(std::uint64_t n, std::uint64_t m, std::uint64_t labels) {
  return reduction_report(default_shared_components(), n, m, labels);
}

std::string format_percent(double percent) {
  char buf[32];
  // avoid printing "-0.00%"
  if (percent > -0.005 && percent < 0.005) percent = 0.0;
  std::snprintf(buf, sizeof buf, "%.2f%%", percent);
  return buf;
}

std::string format_report_text(const ParamReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %14s %14s %14s\n", "component", "dense", "symmetric", "circulant");
  out << line;
  const auto& rows = report.variants.front().rows;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(line, sizeof line, "%-18s %14llu %14llu %14llu\n", rows[i].component.c_str(),
                  static_cast<unsigned long long>(report.variants[0].rows[i].parameters),
                  static_cast<unsigned long long>(report.variants[1].rows[i].parameters),
                  static_cast<unsigned long long>(report.variants[2].rows[i].parameters));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-18s %14llu %14llu %14llu\n", "TOTAL",
                static_cast<unsigned long long>(report.variants[0].total),
                static_cast<unsigned long long>(report.variants[1].total),
                static_cast<unsigned long long>(report.variants[2].total));
  out << line;
  std::snprintf(line, sizeof line, "%-18s %14s %14s %14s\n", "DELTA_VS_DENSE",
                format_percent(report.variants[0].delta_vs_dense).c_str(),
                format_percent(report.variants[1].delta_vs_dense).c_str(),
                format_percent(report.variants[2].delta_vs_dense).c_str());
  out << line;
  return out.str();
}

std::string format_report_csv(const ParamReport& report) {
  std::ostringstream out;
  char pct[32];
  out << "variant,component,parameters,percent_of_total\n";
  for (const auto& r : report.variants) {
    const std::string name(to_string(r.variant));
    for (const auto& row : r.rows) {
      std::snprintf(pct, sizeof pct, "%.2f", row.percent_of_total);
      out << name << ',' << row.component << ',' << row.parameters << ',' << pct << '\n';
    }
    out << name << ",TOTAL," << r.total << ",100.00\n";
    std::snprintf(pct, sizeof pct, "%.2f", r.delta_vs_dense > -0.005 && r.delta_vs_dense < 0.005 ? 0.0 : r.delta_vs_dense);
    out << name << ",DELTA_VS_DENSE,," << pct << '\n';
  }
  return out.str();
}

}  // namespace cirparse
