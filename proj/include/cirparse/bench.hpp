#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cirparse/kernels.hpp"

namespace cirparse {

struct BenchConfig {
  std::vector<std::size_t> dims{256, 512};
  std::vector<Variant> variants{Variant::Dense, Variant::Symmetric, Variant::Circulant};
  std::size_t repeats = 7;
  std::size_t warmup = 1;
  std::size_t sentence_length = 20;  // tokens; ROOT adds one position
  std::size_t min_pairs = 10000;
  std::uint64_t seed = 1;
};

struct BenchRow {
  Variant variant = Variant::Dense;
  std::size_t dim = 0;
  std::size_t pairs = 0;
  double median_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

/// Times the arc score grids of a batch of random sentence views, so only
/// the classifier is measured. Warm-up runs are discarded.
std::vector<BenchRow> run_bench(const BenchConfig& config);

std::string format_bench_csv(const std::vector<BenchRow>& rows);

}  // namespace cirparse
