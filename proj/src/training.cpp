#include "guitod/training.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "guitod/error.hpp"
#include "guitod/features.hpp"
#include "guitod/policy.hpp"
#include "random.hpp"

namespace guitod {

namespace {

struct Example {
  FeatureBundle features;
  Targets targets;
  const DataPoint* point;
};

EpochStats measure(const PolicyParams& params, const std::vector<Example>& data, const PolicyConfig& cfg,
                   std::size_t epoch) {
  EpochStats s;
  s.epoch = epoch;
  std::size_t done = 0;
  for (const auto& ex : data) {
    HeadOutputs heads = forward(params, ex.features);
    s.loss += head_loss(heads, ex.targets);
    Action a = decode(heads, ex.features, cfg.max_span);
    if (actions_equal(a, ex.point->gold)) ++done;
  }
  s.loss /= static_cast<double>(data.size());
  s.action_cr = 100.0 * static_cast<double>(done) / static_cast<double>(data.size());
  if (!std::isfinite(s.loss)) {
    std::ostringstream msg;
    msg << "non-finite training loss at epoch " << epoch << " (step_size " << cfg.step_size << ", momentum "
        << cfg.momentum << ")";
    throw TrainingError(msg.str());
  }
  return s;
}

bool better(const EpochStats& a, const EpochStats& b) {
  if (a.action_cr != b.action_cr) return a.action_cr > b.action_cr;
  return a.loss < b.loss;
}

}  // namespace

TrainResult train(const std::vector<DataPoint>& points, const PolicyConfig& cfg, const TrainOptions& options) {
  validate_config(cfg);
  if (points.empty()) throw TrainingError("training set is empty");

  std::vector<Example> data;
  data.reserve(points.size());
  for (const auto& dp : points) {
    FeatureBundle f = featurize(dp, cfg);
    Targets t = make_targets(dp.gold, f);
    data.push_back({std::move(f), t, &dp});
  }

  const ModelShape shape = ModelShape::from_config(cfg);
  PolicyParams params = PolicyParams::random(shape, cfg.seed, cfg.init_scale);
  PolicyParams velocity = PolicyParams::zeros(shape);
  PolicyParams grad = PolicyParams::zeros(shape);

  TrainResult result;
  EpochStats current = measure(params, data, cfg, 0);
  result.history.push_back(current);
  if (options.on_epoch) options.on_epoch(current);
  result.params = params;
  EpochStats best = current;

  std::mt19937_64 rng(detail::mix(cfg.seed, 0x5452414eULL));
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (options.stop_when_perfect && best.action_cr >= 100.0) break;
    detail::shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      double w = 1.0 / static_cast<double>(stop - start);
      grad.set_zero();
      for (std::size_t i = start; i < stop; ++i) {
        const Example& ex = data[order[i]];
        example_loss_and_gradient(params, ex.features, ex.targets, grad, w);
      }
      if (!grad.all_finite()) {
        throw TrainingError("non-finite gradient at epoch " + std::to_string(epoch));
      }
      if (cfg.grad_clip > 0.0) {
        double norm = std::sqrt(grad.squared_norm());
        if (norm > cfg.grad_clip) grad.scale(cfg.grad_clip / norm);
      }
      // v = mu v - eta g; theta += v
      velocity.scale(cfg.momentum);
      velocity.add_scaled(grad, -cfg.step_size);
      params.add_scaled(velocity, 1.0);
    }
    current = measure(params, data, cfg, epoch);
    result.history.push_back(current);
    if (options.on_epoch) options.on_epoch(current);
    if (better(current, best)) {
      best = current;
      result.params = params;
    }
  }
  result.best_epoch = best.epoch;
  return result;
}

}  // namespace guitod
