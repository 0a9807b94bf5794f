#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "cirparse/adam.hpp"
#include "cirparse/model.hpp"

namespace cirparse {

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  std::size_t steps = 0;  // total updates so far
  std::optional<AttachmentScores> dev;
};

/// Mini-batch training loop. Dropout draws come from seed + 1 and the
/// sentence order from seed + 2, so runs are reproducible.
class Trainer {
 public:
  /// Sentences longer than the configured max_len are left out.
  Trainer(Model& model, const Treebank& train);

  /// One Adam update over the next batch; the order is reshuffled whenever
  /// an epoch's worth of sentences has been used. Returns the batch loss.
  /// Throws NumericError with epoch/step context on a non-finite loss.
  double step();
  /// Runs the remainder of the current epoch.
  EpochLog run_epoch(const Treebank* dev = nullptr);

  std::size_t steps() const { return adam_.steps(); }
  std::size_t epoch() const { return epoch_; }
  std::size_t training_size() const { return train_.size(); }
  std::size_t skipped_long() const { return skipped_long_; }

 private:
  void reshuffle();

  Model& model_;
  std::vector<const Sentence*> train_;
  std::size_t skipped_long_ = 0;
  std::vector<Parameter*> params_;
  Adam adam_;
  std::mt19937_64 dropout_rng_;
  std::mt19937_64 order_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
  double epoch_loss_ = 0.0;
  std::size_t epoch_sentences_ = 0;
};

AttachmentScores evaluate_model(const Model& model, const Treebank& gold);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Trains for config().epochs, keeping the parameters of the epoch with the
/// best dev LAS (the last epoch when no dev set is given).
std::vector<EpochLog> train_model(Model& model, const Treebank& train, const Treebank* dev,
                                  const EpochCallback& on_epoch = {});

}  // namespace cirparse
