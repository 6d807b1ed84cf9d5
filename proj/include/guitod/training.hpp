#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "guitod/config.hpp"
#include "guitod/corpus.hpp"
#include "guitod/model.hpp"

namespace guitod {

struct EpochStats {
  /// 0 is the initial parameters, before any update.
  std::size_t epoch = 0;
  /// Mean per-point loss over the training set.
  double loss = 0.0;
  /// Percent of training points whose decoded action is completed.
  double action_cr = 0.0;
};

struct TrainResult {
  PolicyParams params;
  std::size_t best_epoch = 0;
  std::vector<EpochStats> history;
};

struct TrainOptions {
  /// Called after every evaluated epoch, including epoch 0.
  std::function<void(const EpochStats&)> on_epoch;
  /// Stop once the training action CR reaches 100%.
  bool stop_when_perfect = false;
};

/// Mini-batch gradient descent with heavy-ball momentum on the summed
/// cross-entropy loss. Returns the parameters of the epoch with the highest
/// training action CR (lower loss breaks ties, then the earlier epoch).
/// Throws TrainingError on an empty training set or a non-finite loss.
TrainResult train(const std::vector<DataPoint>& train_points, const PolicyConfig& config,
                  const TrainOptions& options = {});

}  // namespace guitod
