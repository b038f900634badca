#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "sgmm/error.hpp"
#include "sgmm/numkit/gradcheck.hpp"
#include "sgmm/numkit/ops.hpp"
#include "sgmm/tem/encoder.hpp"
#include "sgmm/tem/image.hpp"
#include "sgmm/tem/text.hpp"

using namespace sgmm::tem;
using namespace sgmm::numkit;

namespace {

using Strings = std::vector<std::string>;

Image gradient_image(std::size_t w, std::size_t h) {
  Image img{w, h, std::vector<std::uint8_t>(w * h * 3)};
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t c = 0; c < 3; ++c) img.rgb[(y * w + x) * 3 + c] = static_cast<std::uint8_t>((x * 7 + y * 13 + c * 50) % 256);
  return img;
}

TemConfig small_config(std::size_t layers = 1) {
  TemConfig c;
  c.vocab_size = 6;
  c.d_model = 8;
  c.n_heads = 2;
  c.n_layers = layers;
  c.d_ff = 6;
  c.max_len = 8;
  c.patch_dim = 12;
  c.dropout = 0.3;
  return c;
}

Tensor random_patches(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<double> v(n * d);
  for (auto& x : v) x = rng.uniform();
  return Tensor::from({n, d}, std::move(v));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<double> ln_plain(const std::vector<double>& x, double eps) {
  double mu = 0, var = 0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  std::vector<double> out;
  for (double v : x) out.push_back((v - mu) / std::sqrt(var + eps));
  return out;
}

void set_identity(Tensor& w) {
  auto d = w.mutable_data();
  std::fill(d.begin(), d.end(), 0.0);
  for (std::size_t i = 0; i < w.dim(0) && i < w.dim(1); ++i) d[i * w.dim(1) + i] = 1.0;
}

void set_zero(Tensor& t) {
  auto d = t.mutable_data();
  std::fill(d.begin(), d.end(), 0.0);
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The man speaks."), (Strings{"the", "man", "speaks", "."}));
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_EQ(tokenize("Stand Up for Women"), (Strings{"stand", "up", "for", "women"}));
  EXPECT_EQ(tokenize("  wait...what?!  "), (Strings{"wait", ".", ".", ".", "what", "?", "!"}));
  EXPECT_EQ(tokenize("\xC3\x89\x63ole"), (Strings{"\xC3\xA9\x63ole"}));
}

TEST(Vocabulary, BuildFromCorpus) {
  auto v = Vocabulary::build({"a a b"}, 100);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.token(0), "[PAD]");
  EXPECT_EQ(v.token(1), "[UNK]");
  EXPECT_EQ(v.token(2), "[MASK]");
  EXPECT_EQ(v.id("a"), 3u);
  EXPECT_EQ(v.id("b"), 4u);
  EXPECT_EQ(v.id("zebra"), Vocabulary::kUnk);
  EXPECT_EQ(v.encode({"b", "q"}), (std::vector<std::size_t>{4, 1}));
}

TEST(Vocabulary, TiesLexicographicAndCapped) {
  auto v = Vocabulary::build({"c b a", "b c d"}, 5);
  // b and c appear twice; b first by lexicographic order.
  EXPECT_EQ(v.tokens(), (Strings{"[PAD]", "[UNK]", "[MASK]", "b", "c"}));
  EXPECT_EQ(Vocabulary::build({"c b a", "b c d"}, 5), v);
}

TEST(Vocabulary, TextRoundTrip) {
  auto v = Vocabulary::build({"the man holds a sign .", "a dog on a car"}, 50);
  EXPECT_EQ(Vocabulary::from_text(v.to_text()), v);
  auto path = std::filesystem::temp_directory_path() / "sgmm_vocab_test.txt";
  v.save(path);
  EXPECT_EQ(Vocabulary::load(path), v);
  std::filesystem::remove(path);
  EXPECT_THROW(Vocabulary::from_text("[PAD]\n[UNK]\n"), sgmm::FormatError);
  EXPECT_THROW(Vocabulary::from_text("[PAD]\n[UNK]\n[MASK]\nx\nx\n"), sgmm::FormatError);
}

TEST(Ppm, RoundTripAndHeaderComments) {
  auto img = gradient_image(32, 16);
  EXPECT_EQ(parse_ppm(encode_ppm(img)), img);
  std::string with_comment = "P6 # made by hand\n2 1\n255\n";
  with_comment += std::string("\x01\x02\x03\x04\x05\x06", 6);
  auto small = parse_ppm(with_comment);
  EXPECT_EQ(small.width, 2u);
  EXPECT_EQ(small.rgb, (std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6}));
}

TEST(Ppm, Errors) {
  EXPECT_THROW(parse_ppm("P3\n1 1\n255\n"), sgmm::ParseError);
  EXPECT_THROW(parse_ppm("P6\n1 1\n65535\n"), sgmm::ParseError);
  EXPECT_THROW(parse_ppm("P6\n2 2\n255\nabc"), sgmm::ParseError);
  EXPECT_THROW(parse_ppm("P6\nx 2\n255\n"), sgmm::ParseError);
}

TEST(Patchify, CountsAndLength) {
  auto g = patchify(gradient_image(32, 32));
  EXPECT_EQ(g.count(), 4u);
  for (const auto& p : g.patches) EXPECT_EQ(p.size(), 768u);
  EXPECT_EQ(patchify(gradient_image(48, 48)).count(), 9u);
  EXPECT_THROW(patchify(gradient_image(40, 40)), sgmm::DimensionError);
  EXPECT_EQ(g.tensor().shape(), (Shape{4, 768}));
}

TEST(Patchify, LayoutIsRowMajorChannelInterleaved) {
  auto img = gradient_image(32, 32);
  auto g = patchify(img);
  auto pixel = [&](std::size_t x, std::size_t y, std::size_t c) { return img.rgb[(y * 32 + x) * 3 + c] / 255.0; };
  // Patch 1 is the top-right block; its entry for local (x=2, y=3), green.
  EXPECT_DOUBLE_EQ(g.patches[1][(3 * 16 + 2) * 3 + 1], pixel(18, 3, 1));
  // Patch 2 is bottom-left; local (x=15, y=0), blue.
  EXPECT_DOUBLE_EQ(g.patches[2][(0 * 16 + 15) * 3 + 2], pixel(15, 16, 2));
  for (const auto& p : g.patches)
    for (double v : p) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
}

TEST(TemConfig, Validation) {
  auto c = small_config();
  EXPECT_NO_THROW(c.validate());
  c.n_heads = 3;
  EXPECT_THROW(c.validate(), sgmm::ConfigError);
  c = small_config();
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), sgmm::ConfigError);
  TemConfig defaults;
  EXPECT_EQ(defaults.d_model, 64u);
  EXPECT_EQ(defaults.n_heads, 4u);
  EXPECT_EQ(defaults.n_layers, 2u);
  EXPECT_EQ(defaults.max_len, 128u);
}

TEST(Attention, RowsSumToOne) {
  Rng rng(1);
  auto p = TemParams::init(small_config(), rng);
  auto x = random_patches(rng, 5, 8);
  std::vector<Tensor> weights;
  attention_heads(x, p.layers[0], 2, &weights);
  ASSERT_EQ(weights.size(), 2u);
  for (const auto& a : weights)
    for (std::size_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < 5; ++c) s += a.at(r, c);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
}

TEST(Attention, LengthOneReturnsValueProjection) {
  Rng rng(2);
  auto p = TemParams::init(small_config(), rng);
  auto x = random_patches(rng, 1, 8);
  auto heads = attention_heads(x, p.layers[0], 2);
  auto v = linear(x, p.layers[0].wv, p.layers[0].bv);
  EXPECT_EQ(values(heads), values(v));
}

TEST(TemForward, IdentityLayerHandTrace) {
  Rng rng(3);
  auto c = small_config();
  c.d_ff = 8;
  auto p = TemParams::init(c, rng);
  auto& l = p.layers[0];
  for (Tensor* w : {&l.wq, &l.wk, &l.wv, &l.wo}) set_identity(*w);
  for (Tensor* b : {&l.bq, &l.bk, &l.bv, &l.bo}) set_zero(*b);

  TemInput in{{4}, {}};
  auto out = values(tem_forward(in, p, {}));

  // e = token row + position 0 + text modality; attention of one row is
  // the row itself, so h = LN(2e) and out = LN(h + FFN(h)).
  std::vector<double> e(8), h2(8);
  for (std::size_t j = 0; j < 8; ++j) {
    e[j] = p.token_embedding.at(4, j) + p.positional.at(0, j) + p.modality.at(0, j);
    h2[j] = 2 * e[j];
  }
  const auto h = ln_plain(h2, c.layer_norm_eps);
  std::vector<double> hidden(8, 0.0), f(8, 0.0), sum_hf(8);
  for (std::size_t k = 0; k < 8; ++k) {
    double s = l.ff1_b.at(k);
    for (std::size_t j = 0; j < 8; ++j) s += h[j] * l.ff1_w.at(j, k);
    hidden[k] = std::max(0.0, s);
  }
  for (std::size_t j = 0; j < 8; ++j) {
    double s = l.ff2_b.at(j);
    for (std::size_t k = 0; k < 8; ++k) s += hidden[k] * l.ff2_w.at(k, j);
    sum_hf[j] = h[j] + s;
  }
  const auto expected = ln_plain(sum_hf, c.layer_norm_eps);
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(out[j], expected[j], 1e-12);
}

TEST(TemForward, PatchOrderInvariantWithoutPositions) {
  Rng rng(4);
  auto p = TemParams::init(small_config(2), rng);
  set_zero(p.positional);
  auto patches = random_patches(rng, 3, 12);
  std::vector<double> swapped(values(patches));
  std::swap_ranges(swapped.begin(), swapped.begin() + 12, swapped.begin() + 24);
  auto a = tem_forward({{3, 4}, patches}, p, {});
  auto b = tem_forward({{3, 4}, Tensor::from({3, 12}, swapped)}, p, {});
  for (std::size_t j = 0; j < 8; ++j) EXPECT_NEAR(a.at(j), b.at(j), 1e-12);
}

TEST(TemForward, OutputDimensionAndLimits) {
  Rng rng(5);
  auto p = TemParams::init(small_config(), rng);
  EXPECT_EQ(tem_forward({{3}, {}}, p, {}).shape(), (Shape{8}));
  EXPECT_EQ(tem_forward({{3, 4, 5, 1, 0}, random_patches(rng, 3, 12)}, p, {}).shape(), (Shape{8}));
  EXPECT_THROW(tem_forward({{}, {}}, p, {}), sgmm::InputError);
  EXPECT_THROW(tem_forward({{3, 4, 5, 3, 4, 5, 3, 4, 5}, {}}, p, {}), sgmm::InputError);
  EXPECT_THROW(tem_forward({{9}, {}}, p, {}), sgmm::InputError);
}

TEST(TemForward, AblationsDropSegments) {
  Rng rng(6);
  auto p = TemParams::init(small_config(), rng);
  auto patches = random_patches(rng, 2, 12);
  TemInput both{{3, 4}, patches};
  EXPECT_EQ(values(tem_forward(both, p, {}, TemAblation::kNoText)), values(tem_forward({{}, patches}, p, {})));
  EXPECT_EQ(values(tem_forward(both, p, {}, TemAblation::kNoImage)), values(tem_forward({{3, 4}, {}}, p, {})));
  EXPECT_THROW(tem_forward({{}, patches}, p, {}, TemAblation::kNoImage), sgmm::InputError);
}

TEST(TemForward, DropoutDeterminism) {
  Rng rng(7);
  auto p = TemParams::init(small_config(2), rng);
  TemInput in{{3, 4, 5}, random_patches(rng, 1, 12)};
  EXPECT_EQ(values(tem_forward(in, p, {})), values(tem_forward(in, p, {false, 9, 9, 9})));
  ForwardContext train{true, 11, 3, 0};
  auto t1 = values(tem_forward(in, p, train));
  EXPECT_EQ(t1, values(tem_forward(in, p, train)));
  EXPECT_NE(t1, values(tem_forward(in, p, {})));
  train.step = 4;
  EXPECT_NE(t1, values(tem_forward(in, p, train)));
}

TEST(TemForward, GradientsMatchFiniteDifferences) {
  Rng rng(8);
  auto c = small_config(2);
  c.patch_dim = 768;
  auto p = TemParams::init(c, rng);
  auto head = init_uniform({8}, 8, rng);
  TemInput in{{3, 5}, random_patches(rng, 1, 768)};
  ParamList list;
  p.collect("tem", list);
  std::vector<std::string> names;
  for (const auto& np : list) names.push_back(np.name);
  auto loss = [&] { return bce_loss(sigmoid(sum(mul(tem_forward(in, p, {}), head))), 1.0); };
  for (const auto& r : check_gradients(loss, tensors(list), names)) {
    EXPECT_LE(r.max_rel_error, 1e-4) << r.name;
  }
}

TEST(TemParams, CollectCoversAllLayers) {
  Rng rng(9);
  auto p = TemParams::init(small_config(2), rng);
  ParamList list;
  p.collect("tem", list);
  EXPECT_EQ(list.size(), 4u + 2 * 16);
  EXPECT_EQ(list[4].name, "tem.layer0.attn.wq");
}
