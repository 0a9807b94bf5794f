#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cirparse/kernels.hpp"

namespace cirparse {

struct ClassifierCount {
  std::uint64_t arc = 0;
  std::uint64_t label = 0;
  std::uint64_t total() const { return arc + label; }
  bool operator==(const ClassifierCount&) const = default;
};

/// Closed-form trainable scalar count of the arc (dim n) and label (dim m,
/// L labels) classifiers.
ClassifierCount count_classifier(Variant variant, std::uint64_t n, std::uint64_t m, std::uint64_t labels);

struct SharedComponent {
  std::string name;
  std::uint64_t parameters = 0;
};

/// Reference counts of the non-classifier parts of the baseline parser.
/// These are configuration inputs, not derived from our encoder.
std::vector<SharedComponent> default_shared_components();

struct ComponentRow {
  std::string component;
  std::uint64_t parameters = 0;
  double percent_of_total = 0.0;
};

struct VariantReport {
  Variant variant = Variant::Dense;
  ClassifierCount classifiers;
  std::uint64_t total = 0;
  double delta_vs_dense = 0.0;  // percent
  std::vector<ComponentRow> rows;
};

struct ParamReport {
  std::uint64_t shared_total = 0;
  std::vector<VariantReport> variants;  // dense, symmetric, circulant
  const VariantReport& at(Variant v) const;
};

ParamReport reduction_report(const std::vector<SharedComponent>& shared, std::uint64_t n,
                             std::uint64_t m, std::uint64_t labels);
ParamReport reduction_report(std::uint64_t n, std::uint64_t m, std::uint64_t labels);

/// "-16.64%" style percentage with two decimals.
std::string format_percent(double percent);

std::string format_report_text(const ParamReport& report);
/// Long format: variant,component,parameters,percent_of_total with TOTAL
/// and DELTA_VS_DENSE rows per variant.
std::string format_report_csv(const ParamReport& report);

}  // namespace cirparse
