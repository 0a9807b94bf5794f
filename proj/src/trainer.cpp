#include "cirparse/trainer.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cirparse {

Trainer::Trainer(Model& model, const Treebank& train)
    : model_(model),
      params_(model.parameters()),
      adam_(model.config().adam),
      dropout_rng_(model.config().seed + 1),
      order_rng_(model.config().seed + 2) {
  for (const Sentence& s : train) {
    if (s.size() > model.config().max_len) {
      ++skipped_long_;
      continue;
    }
    train_.push_back(&s);
  }
  if (skipped_long_ > 0) {
    spdlog::info("skipped {} training sentences longer than {} tokens", skipped_long_, model.config().max_len);
  }
  if (train_.empty()) throw DataError("training treebank is empty");
  order_.resize(train_.size());
  reshuffle();
}

void Trainer::reshuffle() {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), order_rng_);
  cursor_ = 0;
  ++epoch_;
  epoch_loss_ = 0.0;
  epoch_sentences_ = 0;
}

double Trainer::step() {
  if (cursor_ >= order_.size()) reshuffle();
  const std::size_t end = std::min(order_.size(), cursor_ + model_.config().batch_size);
  const double inv = 1.0 / static_cast<double>(end - cursor_);
  double batch_loss = 0.0;
  for (Parameter* p : params_) p->zero_grad();
  for (; cursor_ < end; ++cursor_) {
    const std::size_t index = order_[cursor_];
    Tape tape;
    const NodeId loss = model_.loss(tape, *train_[index], Mode::Train, &dropout_rng_, index);
    const double value = tape.value(loss)[0];
    if (!std::isfinite(value)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch_) + ", step " +
                         std::to_string(adam_.steps() + 1) + " (sentence " + std::to_string(index) + ")");
    }
    tape.backward(ad::scale(tape, loss, inv));
    batch_loss += value * inv;
    epoch_loss_ += value;
    ++epoch_sentences_;
  }
  adam_.step(params_);
  return batch_loss;
}

EpochLog Trainer::run_epoch(const Treebank* dev) {
  if (cursor_ >= order_.size()) reshuffle();
  while (cursor_ < order_.size()) step();
  EpochLog log;
  log.epoch = epoch_;
  log.steps = adam_.steps();
  log.mean_loss = epoch_loss_ / static_cast<double>(std::max<std::size_t>(1, epoch_sentences_));
  if (dev != nullptr) log.dev = evaluate_model(model_, *dev);
  return log;
}

AttachmentScores evaluate_model(const Model& model, const Treebank& gold) {
  std::vector<ParseTree> predicted;
  std::vector<ParseTree> reference;
  predicted.reserve(gold.size());
  reference.reserve(gold.size());
  for (const Sentence& s : gold) {
    predicted.push_back(model.parse(s));
    reference.push_back(gold_tree(s, model.vocab()));
  }
  return evaluate(predicted, reference);
}

std::vector<EpochLog> train_model(Model& model, const Treebank& train, const Treebank* dev,
                                  const EpochCallback& on_epoch) {
  Trainer trainer(model, train);
  std::vector<EpochLog> logs;
  std::vector<Tensor> best;
  double best_las = -1.0;
  for (std::size_t e = 0; e < model.config().epochs; ++e) {
    logs.push_back(trainer.run_epoch(dev));
    const EpochLog& log = logs.back();
    if (on_epoch) on_epoch(log);
    if (dev != nullptr && log.dev->las > best_las) {
      best_las = log.dev->las;
      best.clear();
      for (const Parameter* p : model.parameters()) best.push_back(p->value());
    }
  }
  if (!best.empty()) {
    const auto params = model.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value() = best[i];
  }
  return logs;
}

}  // namespace cirparse
