#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "sgmm/error.hpp"
#include "sgmm/model/model.hpp"
#include "sgmm/numkit/checkpoint.hpp"
#include "sgmm/numkit/gradcheck.hpp"
#include "sgmm/numkit/ops.hpp"

using namespace sgmm;
using namespace sgmm::model;
using numkit::Tensor;
using scenegraph::NodeKind;
using scenegraph::SceneGraph;

namespace {

SceneGraph triple(const std::string& subj, const std::string& rel, const std::string& obj) {
  SceneGraph g;
  g.nodes = {{0, NodeKind::kObject, subj}, {1, NodeKind::kRelationship, rel}, {2, NodeKind::kObject, obj}};
  g.edges = {{0, 1}, {1, 2}};
  return g;
}

tem::Image solid_image(std::size_t w, std::size_t h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  tem::Image img{w, h, {}};
  for (std::size_t i = 0; i < w * h; ++i) img.rgb.insert(img.rgb.end(), {r, g, b});
  return img;
}

embeddings::WordVectorTable tiny_words() {
  embeddings::WordVectorTable t(4);
  t.insert("man", {1, 0, 0, 0});
  t.insert("dog", {0, 1, 0, 0});
  t.insert("walks", {0, 0, 1, 0});
  t.insert("park", {0, 0, 0, 1});
  t.insert("in", {0.5, 0.5, 0, 0});
  return t;
}

struct Fixture {
  tem::Vocabulary vocab = tem::Vocabulary::build({"a man walks a dog in the park", "the dog is fake news"}, 32);
  embeddings::WordVectorTable words = tiny_words();

  PrepareOptions options(FusionVariant fusion = FusionVariant::kBase) const {
    PrepareOptions o;
    o.vocab = &vocab;
    o.words = &words;
    o.fusion = fusion;
    o.max_len = 8;
    if (fusion == FusionVariant::kCmsg3) o.cmsg_threshold = 0.8;
    return o;
  }

  ModelConfig config(FusionVariant fusion = FusionVariant::kBase, double dropout = 0.3) const {
    ModelConfig c;
    c.tem.vocab_size = vocab.size();
    c.tem.d_model = 8;
    c.tem.n_heads = 2;
    c.tem.n_layers = 1;
    c.tem.d_ff = 6;
    c.tem.max_len = 8;
    c.tem.dropout = dropout;
    c.graph_input_dim = words.dim();
    c.gsgm_hidden = 5;
    c.gsgm_output = 3;
    c.head_hidden = 4;
    c.fusion = fusion;
    c.head_dropout = dropout;
    return c;
  }

  Example example(std::string id, int label, const std::string& text = "a man walks a dog") const {
    Example e;
    e.id = std::move(id);
    e.text = text;
    e.image = solid_image(16, 16, label ? 200 : 20, 90, label ? 10 : 220);
    e.tsg = triple("man", "walks", "dog");
    e.vsg = triple("dog", "in", "park");
    e.vsg.modality = scenegraph::Modality::kVisual;
    e.label = label;
    return e;
  }

  PreparedExample prepared(int label, FusionVariant fusion = FusionVariant::kBase) const {
    return prepare_example(example("x" + std::to_string(label), label), options(fusion));
  }
};

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST(Fuse, LengthIsSumOfParts) {
  const auto e = fuse(Tensor::zeros({64}), Tensor::zeros({128}), 192);
  EXPECT_EQ(e.shape(), numkit::Shape{192});
  EXPECT_THROW(fuse(Tensor::zeros({64}), Tensor::zeros({64}), 192), ShapeError);
}

TEST(Fuse, ZeroGraphHalfPadsEncoder) {
  const auto e = fuse(Tensor::vector({1, 2}), Tensor::zeros({3}), 5);
  EXPECT_EQ(values(e), (std::vector<double>{1, 2, 0, 0, 0}));
}

TEST(Classify, ZeroWeightsGiveHalf) {
  FusionHead h{Tensor::zeros({3, 2}), Tensor::zeros({2}), Tensor::zeros({2, 1}), Tensor::zeros({1})};
  EXPECT_EQ(classify(Tensor::vector({1, -2, 3}), h, 0.0, {}).item(), 0.5);
}

TEST(Classify, HandComputedTwoUnitHead) {
  FusionHead h{Tensor::from({2, 2}, {1, -1, 2, 1}), Tensor::vector({0.5, -4}), Tensor::from({2, 1}, {0.25, 3}),
               Tensor::vector({-0.1})};
  // hidden = relu([1*1 + 1*2 + 0.5, -1 + 1 - 4]) = [3.5, 0]
  const double z = 3.5 * 0.25 - 0.1;
  EXPECT_NEAR(classify(Tensor::vector({1, 1}), h, 0.0, {}).item(), 1.0 / (1.0 + std::exp(-z)), 1e-15);
}

TEST(Predict, ThresholdAtHalf) {
  Fixture f;
  auto params = ModelParams::init(f.config(), 3);
  const auto ex = f.prepared(1);
  for (double b : {-50.0, 0.0, 50.0}) {
    std::fill(params.head.w2.mutable_data().begin(), params.head.w2.mutable_data().end(), 0.0);
    params.head.b2.mutable_data()[0] = b;
    const auto p = predict(ex, params);
    EXPECT_EQ(p.predicted, p.probability >= 0.5 ? 1 : 0);
    EXPECT_EQ(p.label, 1);
  }
}

TEST(Forward, EncoderFirstGolden) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 11);
  const auto out = forward(f.prepared(1), params, {});
  ASSERT_EQ(out.e_final.numel(), 8u + 6u);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(out.e_final.at(i), out.e_encoder.at(i));
  for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(out.e_final.at(8 + i), out.e_sg.at(i));
  // Frozen from a fixed-seed run.
  const std::vector<double> golden_head = {-0.89720321298794226, 0.14468210664735892, 0.82519260724482157};
  const std::vector<double> golden_tail = {0.0, 0.053449668404992365, 0.12502759651977463};
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(out.e_final.at(i), golden_head[i], 1e-12) << i;
    EXPECT_NEAR(out.e_final.at(11 + i), golden_tail[i], 1e-12) << i;
  }
  EXPECT_NEAR(out.probability.item(), 0.52785711075333641, 1e-12);
}

TEST(Forward, ProbabilityStrictlyInside) {
  Fixture f;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto params = ModelParams::init(f.config(), seed);
    const double p = predict(f.prepared(0), params).probability;
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Forward, CmsgVariantsUseSingleGraphWidth) {
  Fixture f;
  for (auto v : {FusionVariant::kCmsg1, FusionVariant::kCmsg2, FusionVariant::kCmsg3}) {
    const auto params = ModelParams::init(f.config(v), 2);
    const auto out = forward(f.prepared(1, v), params, {});
    EXPECT_EQ(out.e_sg.numel(), 3u) << to_string(v);
    EXPECT_EQ(out.e_final.numel(), 11u);
  }
}

TEST(Forward, RejectsVariantMismatch) {
  Fixture f;
  const auto params = ModelParams::init(f.config(FusionVariant::kCmsg2), 2);
  EXPECT_THROW(forward(f.prepared(1), params, {}), ConfigError);
}

TEST(Forward, CmsgType2SharesLabelNode) {
  Fixture f;
  const auto ex = f.prepared(1, FusionVariant::kCmsg2);
  // "dog" appears in both graphs.
  EXPECT_EQ(ex.fused.size(), 5u);
  EXPECT_FALSE(ex.dummy.has_value());
  EXPECT_EQ(f.prepared(1, FusionVariant::kCmsg1).dummy, std::optional<std::size_t>{6});
}

TEST(Ablation, NoFlagsIsIdentity) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 4);
  const auto ex = f.prepared(1);
  const auto same = apply_ablation(ex, {});
  EXPECT_EQ(same.tem.token_ids, ex.tem.token_ids);
  EXPECT_EQ(values(forward(same, params, {}).e_final), values(forward(ex, params, {}).e_final));
}

TEST(Ablation, NoVsgZeroesSecondHalfOnly) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 4);
  const auto ex = f.prepared(1);
  const auto full = values(forward(ex, params, {}).e_sg);
  const auto cut = values(forward(apply_ablation(ex, {.no_vsg = true}), params, {}).e_sg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(cut[i], full[i]);
  for (std::size_t i = 3; i < 6; ++i) EXPECT_EQ(cut[i], 0.0);
}

TEST(Ablation, NoImageKeepsTokensAndGraphs) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 4);
  const auto ex = f.prepared(1);
  const auto cut = apply_ablation(ex, {.no_image = true});
  EXPECT_EQ(cut.tem.patch_count(), 0u);
  EXPECT_EQ(cut.tem.token_ids, ex.tem.token_ids);
  EXPECT_EQ(values(forward(cut, params, {}).e_sg), values(forward(ex, params, {}).e_sg));
}

TEST(Ablation, NoTextDropsTokens) {
  Fixture f;
  const auto cut = apply_ablation(f.prepared(0), {.no_text = true});
  EXPECT_TRUE(cut.tem.token_ids.empty());
  EXPECT_EQ(cut.tem.patch_count(), 1u);
}

TEST(Ablation, AllFlagsRejected) {
  Fixture f;
  EXPECT_THROW(apply_ablation(f.prepared(0), {true, true, true, true}), ConfigError);
  EXPECT_THROW(parse_ablation("no_text+no_image+no_tsg+no_vsg"), ConfigError);
}

TEST(Ablation, GraphFlagsRejectedForCmsg) {
  Fixture f;
  EXPECT_THROW(apply_ablation(f.prepared(0, FusionVariant::kCmsg2), {.no_tsg = true}), ConfigError);
}

TEST(Ablation, ParseAndName) {
  const auto a = parse_ablation("no_tsg+no_image");
  EXPECT_TRUE(a.no_tsg);
  EXPECT_TRUE(a.no_image);
  EXPECT_FALSE(a.no_text);
  EXPECT_EQ(a.name(), "no_image+no_tsg");
  EXPECT_EQ(parse_ablation("full"), Ablation{});
  EXPECT_EQ(Ablation{}.name(), "full");
  EXPECT_THROW(parse_ablation("no_audio"), ConfigError);
  EXPECT_THROW(parse_ablation("no_text+"), ConfigError);
}

TEST(Ablation, BothGraphsOffDependsOnlyOnEncoder) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 6);
  auto ex = apply_ablation(f.prepared(1), {.no_tsg = true, .no_vsg = true});
  const double p = predict(ex, params).probability;
  auto other = f.example("y", 1);
  other.tsg = triple("park", "in", "park");
  other.vsg = SceneGraph{};
  auto ex2 = apply_ablation(prepare_example(other, f.options()), {.no_tsg = true, .no_vsg = true});
  EXPECT_EQ(predict(ex2, params).probability, p);
  for (auto& v : ex.tsg.features.mutable_data()) v += 3.0;
  EXPECT_EQ(predict(ex, params).probability, p);
}

TEST(Ablation, EncoderEmptyGivesZeroEncoding) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 6);
  const auto ex = apply_ablation(f.prepared(1), {.no_text = true, .no_image = true});
  const auto out = forward(ex, params, {});
  for (double v : values(out.e_encoder)) EXPECT_EQ(v, 0.0);
}

TEST(Metrics, HandConfusion) {
  const auto r = metrics_from_confusion(2, 1, 1, 6);
  EXPECT_NEAR(r.fake.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.fake.recall, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.fake.f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.accuracy, 0.8, 1e-12);
  EXPECT_NEAR(r.real.precision, 6.0 / 7.0, 1e-12);
  EXPECT_NEAR(r.real.recall, 6.0 / 7.0, 1e-12);
  EXPECT_EQ(r.count, 10u);
}

TEST(Metrics, AllCorrect) {
  const auto r = metrics_from_predictions({{0.9, 1, 1}, {0.1, 0, 0}, {0.7, 1, 1}});
  for (double v : {r.accuracy, r.fake.precision, r.fake.recall, r.fake.f1, r.real.precision, r.real.recall,
                   r.real.f1}) {
    EXPECT_EQ(v, 1.0);
  }
}

TEST(Metrics, ZeroDivisionFlagged) {
  const auto r = metrics_from_confusion(0, 0, 3, 5);
  EXPECT_EQ(r.fake.precision, 0.0);
  EXPECT_TRUE(r.fake.precision_undefined);
  EXPECT_FALSE(r.fake.recall_undefined);
  EXPECT_TRUE(r.fake.f1_undefined);
  EXPECT_FALSE(r.real.precision_undefined);
}

TEST(Metrics, EmptySetRejected) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 1);
  EXPECT_THROW(evaluate({}, params), EvaluationError);
}

TEST(TrainConfigTest, Defaults) {
  const TrainConfig c;
  EXPECT_EQ(c.lr, 1e-5);
  EXPECT_EQ(c.weight_decay, 1e-7);
  EXPECT_EQ(c.dropout, 0.3);
  EXPECT_EQ(c.beta1, 0.9);
  EXPECT_EQ(c.beta2, 0.999);
  EXPECT_EQ(c.epsilon, 1e-8);
  EXPECT_EQ(TrainConfig::desk_preset().lr, 1e-3);
}

TEST(TrainConfigTest, BatchSizeRange) {
  TrainConfig c;
  c.batch_size = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c.batch_size = 33;
  EXPECT_THROW(c.validate(), ConfigError);
  c.batch_size = 8;
  EXPECT_NO_THROW(c.validate());
  c.fusion = FusionVariant::kCmsg3;
  EXPECT_THROW(c.validate(), ConfigError);
  c.cmsg_threshold = 0.7;
  EXPECT_NO_THROW(c.validate());
}

TEST(Training, BceGradientMatchesFiniteDifferences) {
  Fixture f;
  auto params = ModelParams::init(f.config(), 21);
  const auto ex = f.prepared(1);
  const auto list = params.parameters();
  std::vector<std::string> names;
  for (const auto& p : list) names.push_back(p.name);
  const std::vector<const PreparedExample*> batch = {&ex};
  auto loss = [&] { return batch_loss(params, batch, {true, 5, 0, 0}); };
  const auto results = numkit::check_gradients(loss, numkit::tensors(list), names);
  ASSERT_EQ(results.size(), list.size());
  for (const auto& r : results) EXPECT_LE(r.max_rel_error, 1e-4) << r.name;
}

TEST(Training, BatchLossIsMeanOfExampleLosses) {
  Fixture f;
  const auto params = ModelParams::init(f.config(), 8);
  std::vector<PreparedExample> exs;
  for (int i = 0; i < 5; ++i) {
    exs.push_back(prepare_example(f.example("e" + std::to_string(i), i % 2, i % 2 ? "fake news dog" : "a man"),
                                  f.options()));
  }
  std::vector<const PreparedExample*> batch;
  for (const auto& e : exs) batch.push_back(&e);
  const tem::ForwardContext ctx{true, 9, 4, 0};
  const double together = batch_loss(params, batch, ctx).item();
  double sum = 0.0;
  for (std::size_t i = 0; i < exs.size(); ++i) {
    tem::ForwardContext c = ctx;
    c.sample = i;
    const double p = forward(exs[i], params, c).probability.item();
    sum += exs[i].label ? -std::log(p) : -std::log(1.0 - p);
  }
  EXPECT_NEAR(together, sum / 5.0, 1e-12);
}

TEST(Training, ZeroLearningRateLeavesParamsBitExact) {
  Fixture f;
  auto params = ModelParams::init(f.config(), 12);
  const auto before = numkit::snapshot(params.parameters());
  std::vector<PreparedExample> set;
  for (int i = 0; i < 10; ++i) set.push_back(prepare_example(f.example("t" + std::to_string(i), i % 2), f.options()));
  TrainConfig c;
  c.lr = 0.0;
  c.weight_decay = 0.0;
  c.batch_size = 8;
  c.epochs = 2;
  train(params, set, {}, c);
  EXPECT_EQ(numkit::snapshot(params.parameters()), before);
}

TEST(Training, SingleExampleLossDecreasesMonotonically) {
  Fixture f;
  auto params = ModelParams::init(f.config(FusionVariant::kBase, 0.0), 13);
  const auto ex = f.prepared(1);
  TrainConfig c = TrainConfig::desk_preset();
  auto adam = numkit::make_adam_state(numkit::tensors(params.parameters()), c.adam());
  const double first = train_step(params, adam, {&ex}, c, 0);
  double last = first;
  for (std::uint64_t step = 1; step < 50; ++step) {
    const double loss = train_step(params, adam, {&ex}, c, step);
    EXPECT_LE(loss, last + 1e-9) << "step " << step;
    last = loss;
  }
  EXPECT_LT(last, first);
}

TEST(Training, FixedSeedIsDeterministic) {
  Fixture f;
  std::vector<PreparedExample> train_set, test_set;
  for (int i = 0; i < 16; ++i) {
    train_set.push_back(prepare_example(f.example("t" + std::to_string(i), i % 2), f.options()));
  }
  for (int i = 0; i < 4; ++i) test_set.push_back(prepare_example(f.example("s" + std::to_string(i), i % 2), f.options()));
  TrainConfig c = TrainConfig::desk_preset();
  c.batch_size = 8;
  c.epochs = 3;
  auto run = [&] {
    auto params = ModelParams::init(f.config(), 14);
    auto logs = train(params, train_set, test_set, c);
    return std::make_pair(logs, numkit::snapshot(params.parameters()));
  };
  const auto a = run();
  const auto b = run();
  ASSERT_EQ(a.first.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.first[i].train_loss, b.first[i].train_loss);
    EXPECT_EQ(a.first[i].test_acc, b.first[i].test_acc);
  }
  EXPECT_EQ(a.second, b.second);
}

TEST(Training, EmptyTrainSplitRejected) {
  Fixture f;
  auto params = ModelParams::init(f.config(), 1);
  TrainConfig c;
  EXPECT_THROW(train(params, {}, {}, c), ConfigError);
}

TEST(Params, CheckpointRoundTrip) {
  Fixture f;
  const auto a = ModelParams::init(f.config(), 31);
  auto b = ModelParams::init(f.config(), 32);
  std::stringstream buf;
  numkit::write_checkpoint(buf, numkit::snapshot(a.parameters()));
  auto list = b.parameters();
  numkit::restore(list, numkit::read_checkpoint(buf));
  EXPECT_EQ(numkit::snapshot(b.parameters()), numkit::snapshot(a.parameters()));
  const auto ex = f.prepared(1);
  EXPECT_EQ(predict(ex, a).probability, predict(ex, b).probability);
}

TEST(Params, NamesAreStable) {
  Fixture f;
  const auto base = ModelParams::init(f.config(), 1).parameters();
  EXPECT_EQ(base.size(), 4u + 16u + 8u + 4u);
  EXPECT_EQ(base.back().name, "head.b2");
  const auto cmsg = ModelParams::init(f.config(FusionVariant::kCmsg1), 1).parameters();
  EXPECT_EQ(cmsg.size(), 4u + 16u + 4u + 4u);
  EXPECT_EQ(cmsg[20].name, "cmsg.gcn1.weight");
}
