#include "guitod/model.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "guitod/error.hpp"

namespace guitod {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Index ix(std::size_t v) { return static_cast<Index>(v); }

VectorXd softmax(const VectorXd& logits) {
  if (logits.size() == 0) return logits;
  VectorXd e = (logits.array() - logits.maxCoeff()).exp();
  return e / e.sum();
}

MatrixXd row_softmax(const MatrixXd& s) {
  MatrixXd out(s.rows(), s.cols());
  for (Index r = 0; r < s.rows(); ++r) out.row(r) = softmax(s.row(r).transpose()).transpose();
  return out;
}

MatrixXd fit_rows(const MatrixXd& m, Index rows) {
  MatrixXd out = MatrixXd::Zero(rows, m.cols());
  Index keep = std::min(rows, m.rows());
  out.topRows(keep) = m.topRows(keep);
  return out;
}

// Cross-entropy of a softmax distribution; writes dloss/dlogits when asked.
double cross_entropy(const VectorXd& probs, std::size_t target, VectorXd* d_logits, double weight) {
  double loss = -std::log(std::max(probs(ix(target)), 1e-300));
  if (d_logits) {
    *d_logits = weight * probs;
    (*d_logits)(ix(target)) -= weight;
  }
  return loss;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters

PolicyParams PolicyParams::zeros(const ModelShape& s) {
  PolicyParams p;
  p.shape = s;
  const Index d = ix(s.d);
  p.item_proj = MatrixXd::Zero(d, ix(s.item_width()));
  p.item_proj_bias = VectorXd::Zero(d);
  p.attn_query = MatrixXd::Zero(d, d);
  p.attn_key = MatrixXd::Zero(d, d);
  p.attn_value = MatrixXd::Zero(d, d);
  for (std::size_t l = 0; l < s.trunk_layers; ++l) {
    p.trunk_weight.push_back(MatrixXd::Zero(d, l == 0 ? ix(s.trunk_input()) : d));
    p.trunk_bias.push_back(VectorXd::Zero(d));
  }
  p.type_weight = MatrixXd::Zero(ix(kNumActionTypes), d);
  p.type_bias = VectorXd::Zero(ix(kNumActionTypes));
  p.token_weight = MatrixXd::Zero(d, ix(s.token_width()));
  p.token_context = MatrixXd::Zero(d, d);
  p.token_bias = VectorXd::Zero(d);
  p.span_start = VectorXd::Zero(d);
  p.span_end = VectorXd::Zero(d);
  p.item_weight = MatrixXd::Zero(d, d);
  p.item_context = MatrixXd::Zero(d, d);
  p.item_bias = VectorXd::Zero(d);
  p.item_score = VectorXd::Zero(d);
  p.dir_weight = MatrixXd::Zero(2, d);
  p.dir_bias = VectorXd::Zero(2);
  return p;
}

PolicyParams PolicyParams::random(const ModelShape& s, std::uint64_t seed, double init_scale) {
  PolicyParams p = zeros(s);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  p.for_each_block([&](const std::string& name, auto& block) {
    bool is_bias = name.find("bias") != std::string::npos;
    if (is_bias) return;
    // Vectors scoring a d-dim hidden state have fan-in d.
    double fan_in = block.cols() == 1 ? static_cast<double>(block.rows()) : static_cast<double>(block.cols());
    double sd = init_scale / std::sqrt(std::max(fan_in, 1.0));
    for (Index i = 0; i < block.size(); ++i) block.data()[i] = sd * normal(rng);
  });
  return p;
}

std::size_t PolicyParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block([&](const std::string&, const auto& b) { n += static_cast<std::size_t>(b.size()); });
  return n;
}

void PolicyParams::set_zero() {
  for_each_block([](const std::string&, auto& b) { b.setZero(); });
}

void PolicyParams::scale(double factor) {
  for_each_block([&](const std::string&, auto& b) { b *= factor; });
}

void PolicyParams::add_scaled(const PolicyParams& other, double scale) {
  std::vector<const double*> src;
  other.for_each_block([&](const std::string&, const auto& b) { src.push_back(b.data()); });
  std::size_t i = 0;
  for_each_block([&](const std::string&, auto& b) {
    const double* o = src[i++];
    for (Index j = 0; j < b.size(); ++j) b.data()[j] += scale * o[j];
  });
}

double PolicyParams::squared_norm() const {
  double s = 0.0;
  for_each_block([&](const std::string&, const auto& b) { s += b.squaredNorm(); });
  return s;
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  for_each_block([&](const std::string&, const auto& b) { ok = ok && b.allFinite(); });
  return ok;
}

bool PolicyParams::operator==(const PolicyParams& o) const {
  if (!(shape == o.shape)) return false;
  std::vector<std::pair<Index, const double*>> mine;
  for_each_block([&](const std::string&, const auto& b) { mine.emplace_back(b.size(), b.data()); });
  std::size_t i = 0;
  bool eq = true;
  o.for_each_block([&](const std::string&, const auto& b) {
    if (!eq) return;
    if (i >= mine.size() || mine[i].first != b.size()) {
      eq = false;
      return;
    }
    for (Index j = 0; j < b.size(); ++j) eq = eq && mine[i].second[j] == b.data()[j];
    ++i;
  });
  return eq && i == mine.size();
}

Targets make_targets(const Action& gold, const FeatureBundle& features) {
  Targets t;
  t.type = gold.type();
  switch (gold.type()) {
    case ActionType::Click:
      if (gold.item() < features.item_count()) t.item = gold.item();
      break;
    case ActionType::Swipe:
      t.direction = gold.direction();
      break;
    case ActionType::Input:
      t.span = label_span(features, gold.text());
      break;
    default:
      break;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Screen-history fold

MatrixXd fold_screen_history(const std::vector<MatrixXd>& screens, const MatrixXd& w_query,
                             const MatrixXd& w_key, const MatrixXd& w_value, FoldCache* cache) {
  if (screens.empty()) throw std::invalid_argument("fold_screen_history: empty screen sequence");
  if (screens.size() == 1) {
    if (cache) {
      *cache = FoldCache{};
      cache->inputs.push_back(screens.front());
      cache->original_rows.push_back(screens.front().rows());
    }
    return screens.front();
  }
  const Index k = screens.back().rows();
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_query.rows()));
  if (cache) *cache = FoldCache{};

  MatrixXd state = fit_rows(screens.front(), k);
  if (cache) {
    cache->inputs.push_back(state);
    cache->original_rows.push_back(screens.front().rows());
  }
  for (std::size_t l = 1; l < screens.size(); ++l) {
    MatrixXd current = fit_rows(screens[l], k);
    MatrixXd q = current * w_query.transpose();
    MatrixXd key = state * w_key.transpose();
    MatrixXd value = state * w_value.transpose();
    MatrixXd attn = row_softmax(q * key.transpose() * scale);
    MatrixXd next = attn * value + current;
    if (cache) {
      cache->inputs.push_back(current);
      cache->original_rows.push_back(screens[l].rows());
      cache->history.push_back(state);
      cache->query.push_back(std::move(q));
      cache->key.push_back(std::move(key));
      cache->value.push_back(std::move(value));
      cache->attention.push_back(std::move(attn));
    }
    state = std::move(next);
  }
  return state;
}

std::vector<MatrixXd> fold_screen_history_backward(const FoldCache& cache, const MatrixXd& d_out,
                                                   const MatrixXd& w_query, const MatrixXd& w_key,
                                                   const MatrixXd& w_value, MatrixXd& d_query,
                                                   MatrixXd& d_key, MatrixXd& d_value) {
  const std::size_t L = cache.inputs.size();
  std::vector<MatrixXd> d_inputs(L);
  if (L == 1) {
    d_inputs[0] = d_out;
    return d_inputs;
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(w_query.rows()));
  MatrixXd d_state = d_out;
  for (std::size_t l = L - 1; l >= 1; --l) {
    const std::size_t step = l - 1;
    const MatrixXd& attn = cache.attention[step];
    const MatrixXd& q = cache.query[step];
    const MatrixXd& key = cache.key[step];
    const MatrixXd& value = cache.value[step];
    const MatrixXd& prev = cache.history[step];
    const MatrixXd& current = cache.inputs[l];

    MatrixXd d_current = d_state;  // residual
    MatrixXd d_attn = d_state * value.transpose();
    MatrixXd d_v = attn.transpose() * d_state;
    VectorXd row_dot = (d_attn.array() * attn.array()).rowwise().sum();
    MatrixXd d_scores = attn.array() * (d_attn.colwise() - row_dot).array();
    MatrixXd d_q = d_scores * key * scale;
    MatrixXd d_k = d_scores.transpose() * q * scale;

    d_query += d_q.transpose() * current;
    d_current += d_q * w_query;
    d_key += d_k.transpose() * prev;
    d_value += d_v.transpose() * prev;
    d_state = d_k * w_key + d_v * w_value;
    d_inputs[l] = std::move(d_current);
  }
  d_inputs[0] = std::move(d_state);

  for (std::size_t l = 0; l < L; ++l) {
    Index rows = cache.original_rows[l];
    MatrixXd g = MatrixXd::Zero(rows, d_inputs[l].cols());
    Index keep = std::min(rows, d_inputs[l].rows());
    g.topRows(keep) = d_inputs[l].topRows(keep);
    d_inputs[l] = std::move(g);
  }
  return d_inputs;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct Activations {
  std::vector<MatrixXd> projected;  // per screen, k_s x d
  FoldCache fold;
  MatrixXd items;  // folded, k x d
  VectorXd trunk_in;
  std::vector<VectorXd> hidden;  // per trunk layer
  MatrixXd item_hidden;          // k x d
  MatrixXd token_hidden;         // n x d
  HeadOutputs out;
};

Activations run_forward(const PolicyParams& p, const FeatureBundle& f) {
  const ModelShape& s = p.shape;
  const Index d = ix(s.d);
  if (f.dialogue_vec.size() != ix(s.hash_dim) || f.action_hist.rows() != ix(s.history) ||
      f.dialogue_token_feats.cols() != ix(s.token_width())) {
    throw std::invalid_argument("feature bundle does not match the model shape");
  }
  Activations a;
  for (const auto& x : f.screen_item_feats) {
    if (x.cols() != ix(s.item_width())) throw std::invalid_argument("item feature width mismatch");
    MatrixXd proj = x * p.item_proj.transpose();
    proj.rowwise() += p.item_proj_bias.transpose();
    a.projected.push_back(std::move(proj));
  }
  a.items = fold_screen_history(a.projected, p.attn_query, p.attn_key, p.attn_value, &a.fold);
  const Index k = a.items.rows();

  VectorXd pooled = k > 0 ? VectorXd(a.items.colwise().mean().transpose()) : VectorXd::Zero(d);
  a.trunk_in.resize(ix(s.trunk_input()));
  Index off = 0;
  a.trunk_in.segment(off, ix(s.hash_dim)) = f.dialogue_vec;
  off += ix(s.hash_dim);
  for (Index r = 0; r < f.action_hist.rows(); ++r) {
    a.trunk_in.segment(off, ix(kNumActionTypes)) = f.action_hist.row(r).transpose();
    off += ix(kNumActionTypes);
  }
  a.trunk_in.segment(off, d) = pooled;

  VectorXd h = a.trunk_in;
  for (std::size_t l = 0; l < p.trunk_weight.size(); ++l) {
    h = (p.trunk_weight[l] * h + p.trunk_bias[l]).array().tanh().matrix();
    a.hidden.push_back(h);
  }

  a.out.action_type = softmax(p.type_weight * h + p.type_bias);
  a.out.direction = softmax(p.dir_weight * h + p.dir_bias);

  if (k > 0) {
    VectorXd ctx = p.item_context * h + p.item_bias;
    MatrixXd pre = a.items * p.item_weight.transpose();
    pre.rowwise() += ctx.transpose();
    a.item_hidden = pre.array().tanh().matrix();
    a.out.item = softmax(a.item_hidden * p.item_score);
  } else {
    a.item_hidden = MatrixXd(0, d);
    a.out.item = VectorXd(0);
  }

  const Index n = f.dialogue_token_feats.rows();
  if (n > 0) {
    VectorXd ctx = p.token_context * h + p.token_bias;
    MatrixXd pre = f.dialogue_token_feats * p.token_weight.transpose();
    pre.rowwise() += ctx.transpose();
    a.token_hidden = pre.array().tanh().matrix();
    a.out.span_start = softmax(a.token_hidden * p.span_start);
    a.out.span_end = softmax(a.token_hidden * p.span_end);
  } else {
    a.token_hidden = MatrixXd(0, d);
    a.out.span_start = VectorXd(0);
    a.out.span_end = VectorXd(0);
  }
  return a;
}

}  // namespace

double head_loss(const HeadOutputs& out, const Targets& t) {
  double loss = cross_entropy(out.action_type, static_cast<std::size_t>(t.type), nullptr, 1.0);
  if (t.type == ActionType::Click && t.item && out.item.size() > 0) {
    loss += cross_entropy(out.item, *t.item, nullptr, 1.0);
  }
  if (t.type == ActionType::Swipe && t.direction) {
    loss += cross_entropy(out.direction, static_cast<std::size_t>(*t.direction), nullptr, 1.0);
  }
  if (t.type == ActionType::Input && t.span && out.span_start.size() > 0) {
    loss += cross_entropy(out.span_start, t.span->first, nullptr, 1.0);
    loss += cross_entropy(out.span_end, t.span->second, nullptr, 1.0);
  }
  return loss;
}

HeadOutputs forward(const PolicyParams& params, const FeatureBundle& features) {
  return run_forward(params, features).out;
}

double example_loss(const PolicyParams& params, const FeatureBundle& features, const Targets& targets) {
  return head_loss(run_forward(params, features).out, targets);
}

double example_loss_and_gradient(const PolicyParams& p, const FeatureBundle& f, const Targets& t,
                                 PolicyParams& g, double w) {
  Activations a = run_forward(p, f);
  const double loss = head_loss(a.out, t);
  const ModelShape& s = p.shape;
  const Index d = ix(s.d);
  const VectorXd& h = a.hidden.back();
  VectorXd dh = VectorXd::Zero(d);
  MatrixXd d_items = MatrixXd::Zero(a.items.rows(), d);

  VectorXd d_logits;
  cross_entropy(a.out.action_type, static_cast<std::size_t>(t.type), &d_logits, w);
  g.type_weight += d_logits * h.transpose();
  g.type_bias += d_logits;
  dh += p.type_weight.transpose() * d_logits;

  if (t.type == ActionType::Swipe && t.direction) {
    cross_entropy(a.out.direction, static_cast<std::size_t>(*t.direction), &d_logits, w);
    g.dir_weight += d_logits * h.transpose();
    g.dir_bias += d_logits;
    dh += p.dir_weight.transpose() * d_logits;
  }

  if (t.type == ActionType::Click && t.item && a.items.rows() > 0) {
    cross_entropy(a.out.item, *t.item, &d_logits, w);
    g.item_score += a.item_hidden.transpose() * d_logits;
    MatrixXd d_pre = (d_logits * p.item_score.transpose()).array() * (1.0 - a.item_hidden.array().square());
    g.item_weight += d_pre.transpose() * a.items;
    d_items += d_pre * p.item_weight;
    VectorXd d_ctx = d_pre.colwise().sum().transpose();
    g.item_context += d_ctx * h.transpose();
    g.item_bias += d_ctx;
    dh += p.item_context.transpose() * d_ctx;
  }

  if (t.type == ActionType::Input && t.span && a.token_hidden.rows() > 0) {
    VectorXd d_start, d_end;
    cross_entropy(a.out.span_start, t.span->first, &d_start, w);
    cross_entropy(a.out.span_end, t.span->second, &d_end, w);
    g.span_start += a.token_hidden.transpose() * d_start;
    g.span_end += a.token_hidden.transpose() * d_end;
    MatrixXd d_hidden = d_start * p.span_start.transpose() + d_end * p.span_end.transpose();
    MatrixXd d_pre = d_hidden.array() * (1.0 - a.token_hidden.array().square());
    g.token_weight += d_pre.transpose() * f.dialogue_token_feats;
    VectorXd d_ctx = d_pre.colwise().sum().transpose();
    g.token_context += d_ctx * h.transpose();
    g.token_bias += d_ctx;
    dh += p.token_context.transpose() * d_ctx;
  }

  // Trunk.
  VectorXd d_layer = dh;
  for (std::size_t l = p.trunk_weight.size(); l-- > 0;) {
    const VectorXd& out = a.hidden[l];
    const VectorXd& in = l == 0 ? a.trunk_in : a.hidden[l - 1];
    VectorXd d_pre = d_layer.array() * (1.0 - out.array().square());
    g.trunk_weight[l] += d_pre * in.transpose();
    g.trunk_bias[l] += d_pre;
    d_layer = p.trunk_weight[l].transpose() * d_pre;
  }
  const Index k = a.items.rows();
  if (k > 0) {
    VectorXd d_pooled = d_layer.tail(d) / static_cast<double>(k);
    d_items.rowwise() += d_pooled.transpose();
  }

  // Screen-history fold and item projection.
  auto d_projected = fold_screen_history_backward(a.fold, d_items, p.attn_query, p.attn_key, p.attn_value,
                                                  g.attn_query, g.attn_key, g.attn_value);
  for (std::size_t sidx = 0; sidx < d_projected.size(); ++sidx) {
    const MatrixXd& dp = d_projected[sidx];
    if (dp.rows() == 0) continue;
    g.item_proj += dp.transpose() * f.screen_item_feats[sidx];
    g.item_proj_bias += dp.colwise().sum().transpose();
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json params_to_json(const PolicyParams& params) {
  nlohmann::json tensors = nlohmann::json::object();
  params.for_each_block([&](const std::string& name, const auto& b) {
    std::vector<double> data(b.data(), b.data() + b.size());
    tensors[name] = {{"shape", {b.rows(), b.cols()}}, {"data", std::move(data)}};
  });
  const ModelShape& s = params.shape;
  return {{"format", "gui-tod-policy-params"},
          {"version", 1},
          {"shape", {{"d", s.d}, {"M", s.trunk_layers}, {"hash_dim", s.hash_dim}, {"H", s.history}}},
          {"tensors", std::move(tensors)}};
}

PolicyParams params_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "gui-tod-policy-params") throw ValidationError("not a policy parameter file");
    if (j.at("version") != 1) throw ValidationError("unsupported parameter file version");
    const auto& sj = j.at("shape");
    ModelShape s{sj.at("d").get<std::size_t>(), sj.at("M").get<std::size_t>(),
                 sj.at("hash_dim").get<std::size_t>(), sj.at("H").get<std::size_t>()};
    PolicyParams p = PolicyParams::zeros(s);
    const auto& tensors = j.at("tensors");
    p.for_each_block([&](const std::string& name, auto& b) {
      const auto& t = tensors.at(name);
      auto rows = t.at("shape").at(0).get<Index>();
      auto cols = t.at("shape").at(1).get<Index>();
      if (rows != b.rows() || cols != b.cols()) {
        throw ValidationError("tensor '" + name + "' has shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", expected " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
      }
      const auto& data = t.at("data");
      if (data.size() != static_cast<std::size_t>(b.size())) {
        throw ValidationError("tensor '" + name + "' has the wrong number of values");
      }
      for (Index i = 0; i < b.size(); ++i) b.data()[i] = data[static_cast<std::size_t>(i)].template get<double>();
    });
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed parameter file: ") + e.what());
  }
}

}  // namespace guitod
