#include "sgmm/model/model.hpp"

#include <cmath>
#include <numeric>

#include "sgmm/error.hpp"
#include "sgmm/numkit/ops.hpp"

namespace sgmm::model {

using namespace numkit;

namespace {

constexpr std::uint64_t kHeadDropoutLayer = 1000;

}  // namespace

void ModelConfig::validate() const {
  tem.validate();
  if (graph_input_dim == 0 || gsgm_hidden == 0 || gsgm_output == 0 || head_hidden == 0) {
    throw ConfigError("model: dimensions must be positive");
  }
  if (!(head_dropout >= 0.0 && head_dropout < 1.0)) throw ConfigError("model: head_dropout must lie in [0, 1)");
}

FusionHead FusionHead::init(std::size_t d_fused, std::size_t d_hidden, Rng& rng) {
  FusionHead h;
  h.w1 = init_uniform({d_fused, d_hidden}, d_fused, rng);
  h.b1 = init_uniform({d_hidden}, d_fused, rng);
  h.w2 = init_uniform({d_hidden, 1}, d_hidden, rng);
  h.b2 = init_uniform({1}, d_hidden, rng);
  return h;
}

void FusionHead::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".w1", w1});
  out.push_back({prefix + ".b1", b1});
  out.push_back({prefix + ".w2", w2});
  out.push_back({prefix + ".b2", b2});
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ModelParams p;
  p.config = config;
  p.tem = tem::TemParams::init(config.tem, rng);
  if (config.fusion == FusionVariant::kBase) {
    p.gsgm = gsgm::GsgmParams::init(config.graph_input_dim, config.gsgm_hidden, config.gsgm_output, rng,
                                    config.gcn_bias);
  } else {
    p.cmsg = gsgm::GcnStack::init(config.graph_input_dim, config.gsgm_hidden, config.gsgm_output, rng,
                                  config.gcn_bias);
  }
  p.head = FusionHead::init(config.fused_dim(), config.head_hidden, rng);
  return p;
}

ParamList ModelParams::parameters() const {
  ParamList out;
  tem.collect("tem", out);
  if (config.fusion == FusionVariant::kBase) {
    gsgm.collect("gsgm", out);
  } else {
    cmsg.collect("cmsg", out);
  }
  head.collect("head", out);
  return out;
}

Tensor fuse(const Tensor& e_encoder, const Tensor& e_sg, std::size_t d_fused) {
  if (e_encoder.rank() != 1 || e_sg.rank() != 1) throw ShapeError("fuse: inputs must be vectors");
  if (e_encoder.numel() + e_sg.numel() != d_fused) {
    throw ShapeError("fuse: " + std::to_string(e_encoder.numel()) + " + " + std::to_string(e_sg.numel()) +
                     " does not match d_fused " + std::to_string(d_fused));
  }
  return concat({e_encoder, e_sg});
}

Tensor classify(const Tensor& e_final, const FusionHead& head, double dropout_p, const tem::ForwardContext& ctx) {
  Tensor hidden = relu(linear(e_final, head.w1, head.b1));
  hidden = dropout(hidden, dropout_p, {ctx.seed, kHeadDropoutLayer, ctx.step, ctx.sample}, ctx.training);
  return sigmoid(linear(hidden, head.w2, head.b2));
}

ForwardOutput forward(const PreparedExample& example, const ModelParams& params, const tem::ForwardContext& ctx) {
  const ModelConfig& config = params.config;
  if (example.fusion != config.fusion) {
    throw ConfigError("example prepared for " + std::string(to_string(example.fusion)) + " but model is " +
                      std::string(to_string(config.fusion)));
  }
  ForwardOutput out;
  if (example.tem.token_ids.empty() && example.tem.patch_count() == 0) {
    out.e_encoder = Tensor::zeros({config.tem.d_model});
  } else {
    out.e_encoder = tem::tem_forward(example.tem, params.tem, ctx);
  }
  switch (config.fusion) {
    case FusionVariant::kBase:
      out.e_sg = gsgm::gsgm_forward(example.tsg, example.vsg, params.gsgm, example.graph_mask);
      break;
    case FusionVariant::kCmsg1:
      out.e_sg = gsgm::gsgm_forward_cmsg(example.fused, params.cmsg, gsgm::FusedReadout::kDummy, example.dummy);
      break;
    case FusionVariant::kCmsg2:
    case FusionVariant::kCmsg3:
      out.e_sg = gsgm::gsgm_forward_cmsg(example.fused, params.cmsg, gsgm::FusedReadout::kMeanPool, std::nullopt);
      break;
  }
  out.e_final = fuse(out.e_encoder, out.e_sg, config.fused_dim());
  out.probability = classify(out.e_final, params.head, config.head_dropout, ctx);
  return out;
}

Prediction predict(const PreparedExample& example, const ModelParams& params) {
  const double p = forward(example, params, {}).probability.item();
  return {p, p >= 0.5 ? 1 : 0, example.label};
}

TrainConfig TrainConfig::desk_preset() {
  TrainConfig c;
  c.lr = 1e-3;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("train: lr must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("train: dropout must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw ConfigError("train: epsilon must be positive");
  if (batch_size < 8 || batch_size > 32) {
    throw ConfigError("train: batch_size " + std::to_string(batch_size) + " outside [8, 32]");
  }
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  ablation.validate();
  if (fusion != FusionVariant::kBase && (ablation.no_tsg || ablation.no_vsg)) {
    throw ConfigError("train: no_tsg / no_vsg ablations apply to the dual-graph model only");
  }
  if (fusion == FusionVariant::kCmsg3) {
    if (!cmsg_threshold || !(*cmsg_threshold > 0.0 && *cmsg_threshold <= 1.0)) {
      throw ConfigError("train: cmsg3 needs a threshold in (0, 1]");
    }
  } else if (cmsg_threshold) {
    throw ConfigError("train: a threshold is only meaningful for cmsg3");
  }
}

Tensor batch_loss(const ModelParams& params, const std::vector<const PreparedExample*>& batch,
                  const tem::ForwardContext& ctx, std::vector<Prediction>* predictions) {
  if (batch.empty()) throw EmptyInputError("batch_loss: empty batch");
  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    tem::ForwardContext sample_ctx = ctx;
    sample_ctx.sample = i;
    const PreparedExample& ex = *batch[i];
    const Tensor p = forward(ex, params, sample_ctx).probability;
    if (predictions) {
      const double pv = p.item();
      predictions->push_back({pv, pv >= 0.5 ? 1 : 0, ex.label});
    }
    losses.push_back(reshape(bce_loss(p, static_cast<double>(ex.label)), {1}));
  }
  return mean(concat(losses));
}

double train_step(ModelParams& params, AdamState& adam, const std::vector<const PreparedExample*>& batch,
                  const TrainConfig& config, std::uint64_t step, std::vector<Prediction>* predictions) {
  auto list = params.parameters();
  auto ts = tensors(list);
  zero_grads(ts);
  const Tensor loss = batch_loss(params, batch, {true, config.seed, step, 0}, predictions);
  backward(loss);
  adam_step(ts, adam);
  const double value = loss.item();
  if (!std::isfinite(value)) throw NumericError("train: non-finite loss at step " + std::to_string(step));
  return value;
}

std::vector<EpochLog> train(ModelParams& params, const std::vector<PreparedExample>& train_set,
                            const std::vector<PreparedExample>& test_set, const TrainConfig& config,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  config.validate();
  if (train_set.empty()) throw ConfigError("train: empty training split");
  auto ts = tensors(params.parameters());
  AdamState adam = make_adam_state(ts, config.adam());

  std::vector<EpochLog> logs;
  std::vector<std::size_t> order(train_set.size());
  std::uint64_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(hash_key({config.seed, epoch}));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::vector<Prediction> preds;
    preds.reserve(train_set.size());
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const PreparedExample*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train_set[order[i]]);
      loss_sum += train_step(params, adam, batch, config, step++, &preds) * static_cast<double>(batch.size());
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_sum / static_cast<double>(train_set.size());
    log.train_acc = metrics_from_predictions(preds).accuracy;
    log.test_acc = test_set.empty() ? 0.0 : evaluate(test_set, params).accuracy;
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  return logs;
}

namespace {

double safe_ratio(std::size_t num, std::size_t den, bool& undefined) {
  if (den == 0) {
    undefined = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.precision = safe_ratio(tp, tp + fp, m.precision_undefined);
  m.recall = safe_ratio(tp, tp + fn, m.recall_undefined);
  if (m.precision + m.recall == 0.0) {
    m.f1_undefined = true;
    m.f1 = 0.0;
  } else {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  }
  return m;
}

}  // namespace

MetricsReport metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.fn = fn;
  r.tn = tn;
  r.count = tp + fp + fn + tn;
  bool unused = false;
  r.accuracy = safe_ratio(tp + tn, r.count, unused);
  r.fake = class_metrics(tp, fp, fn);
  // Real is the positive class here: its true positives are our true negatives.
  r.real = class_metrics(tn, fn, fp);
  return r;
}

MetricsReport metrics_from_predictions(const std::vector<Prediction>& predictions) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& p : predictions) {
    if (p.label != 0 && p.label != 1) throw LabelError("label must be 0 or 1, got " + std::to_string(p.label));
    if (p.predicted == 1) {
      (p.label == 1 ? tp : fp)++;
    } else {
      (p.label == 1 ? fn : tn)++;
    }
  }
  return metrics_from_confusion(tp, fp, fn, tn);
}

MetricsReport evaluate(const std::vector<PreparedExample>& examples, const ModelParams& params) {
  if (examples.empty()) throw EvaluationError("evaluate: empty set");
  std::vector<Prediction> preds;
  preds.reserve(examples.size());
  for (const auto& ex : examples) preds.push_back(predict(ex, params));
  return metrics_from_predictions(preds);
}

}  // namespace sgmm::model
