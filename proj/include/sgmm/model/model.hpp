#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sgmm/gsgm/gsgm.hpp"
#include "sgmm/model/example.hpp"
#include "sgmm/numkit/adam.hpp"
#include "sgmm/numkit/params.hpp"
#include "sgmm/tem/encoder.hpp"

namespace sgmm::model {

using numkit::Tensor;

struct ModelConfig {
  tem::TemConfig tem;
  std::size_t graph_input_dim = 50;
  std::size_t gsgm_hidden = 64;
  std::size_t gsgm_output = 64;
  std::size_t head_hidden = 128;
  bool gcn_bias = true;
  FusionVariant fusion = FusionVariant::kBase;
  // Dropout on the fusion head's hidden layer.
  double head_dropout = 0.3;

  std::size_t sg_dim() const { return fusion == FusionVariant::kBase ? 2 * gsgm_output : gsgm_output; }
  std::size_t fused_dim() const { return tem.d_model + sg_dim(); }
  void validate() const;
};

struct FusionHead {
  Tensor w1, b1, w2, b2;

  static FusionHead init(std::size_t d_fused, std::size_t d_hidden, numkit::Rng& rng);
  void collect(const std::string& prefix, numkit::ParamList& out) const;
};

struct ModelParams {
  ModelConfig config;
  tem::TemParams tem;
  gsgm::GsgmParams gsgm;  // base variant
  gsgm::GcnStack cmsg;    // CMSG variants
  FusionHead head;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);
  // Every trainable tensor under a stable dotted name.
  numkit::ParamList parameters() const;
};

// E_final = E_encoder ++ E_SG; ShapeError unless the length is d_fused.
Tensor fuse(const Tensor& e_encoder, const Tensor& e_sg, std::size_t d_fused);

struct Prediction {
  double probability = 0.5;
  int predicted = 0;  // probability >= 0.5 -> fake = 1
  int label = 0;
};

// sigmoid(W2 relu(W1 e + b1) + b2) as a one-element tensor.
Tensor classify(const Tensor& e_final, const FusionHead& head, double dropout_p,
                const tem::ForwardContext& ctx);

struct ForwardOutput {
  Tensor e_encoder;
  Tensor e_sg;
  Tensor e_final;
  Tensor probability;
};

ForwardOutput forward(const PreparedExample& example, const ModelParams& params,
                      const tem::ForwardContext& ctx);

Prediction predict(const PreparedExample& example, const ModelParams& params);

struct TrainConfig {
  double lr = 1e-5;
  double weight_decay = 1e-7;
  double dropout = 0.3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  Ablation ablation;
  FusionVariant fusion = FusionVariant::kBase;
  std::optional<double> cmsg_threshold;
  embeddings::FeatureMode feature_mode = embeddings::FeatureMode::kGlove;

  // Same as the defaults except a learning rate suited to random init.
  static TrainConfig desk_preset();
  numkit::AdamConfig adam() const { return {lr, weight_decay, beta1, beta2, epsilon}; }
  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
};

// Mean BCE over the batch; one Adam update. Returns the batch loss.
double train_step(ModelParams& params, numkit::AdamState& adam, const std::vector<const PreparedExample*>& batch,
                  const TrainConfig& config, std::uint64_t step, std::vector<Prediction>* predictions = nullptr);

// Mean BCE over `batch` as a scalar tensor, in the given mode.
Tensor batch_loss(const ModelParams& params, const std::vector<const PreparedExample*>& batch,
                  const tem::ForwardContext& ctx, std::vector<Prediction>* predictions = nullptr);

// Fixed-epoch mini-batch Adam. Batches follow a shuffle keyed by (seed,
// epoch). ConfigError on an empty training split.
std::vector<EpochLog> train(ModelParams& params, const std::vector<PreparedExample>& train_set,
                            const std::vector<PreparedExample>& test_set, const TrainConfig& config,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the value was a 0/0 and has been reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct MetricsReport {
  std::size_t count = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;  // fake is the positive class
  double accuracy = 0.0;
  ClassMetrics fake;
  ClassMetrics real;
};

MetricsReport metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);
MetricsReport metrics_from_predictions(const std::vector<Prediction>& predictions);

// EvaluationError on an empty set.
MetricsReport evaluate(const std::vector<PreparedExample>& examples, const ModelParams& params);

}  // namespace sgmm::model
