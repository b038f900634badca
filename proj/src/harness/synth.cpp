#include "sgmm/harness/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include <json.hpp>

#include "sgmm/error.hpp"
#include "sgmm/numkit/random.hpp"
#include "sgmm/scenegraph/scene_graph.hpp"
#include "sgmm/tem/image.hpp"
#include "sgmm/tem/text.hpp"

namespace sgmm::harness {

namespace fs = std::filesystem;
using numkit::Rng;
using scenegraph::NodeKind;
using scenegraph::SceneGraph;

std::string_view to_string(Signal s) {
  switch (s) {
    case Signal::kText:
      return "text";
    case Signal::kImage:
      return "image";
    case Signal::kTsg:
      return "tsg";
    case Signal::kVsg:
      return "vsg";
    case Signal::kMixed:
      return "mixed";
  }
  return "?";
}

Signal parse_signal(std::string_view s) {
  if (s == "text") return Signal::kText;
  if (s == "image") return Signal::kImage;
  if (s == "tsg") return Signal::kTsg;
  if (s == "vsg") return Signal::kVsg;
  if (s == "mixed") return Signal::kMixed;
  throw ConfigError("unknown signal \"" + std::string(s) + "\"");
}

namespace {

constexpr std::array<std::string_view, 90> kFiller = {
    "the",     "a",        "man",      "woman",   "boy",      "girl",     "person",  "child",    "officer",
    "speaker", "reporter", "crowd",    "dog",     "cat",      "horse",    "bird",    "car",      "bus",
    "bike",    "truck",    "table",    "chair",   "podium",   "desk",     "sign",    "cup",      "phone",
    "camera",  "flag",     "banner",   "hat",     "shirt",    "screen",   "book",    "bag",      "building",
    "street",  "road",     "tree",     "stage",   "room",     "city",     "red",     "blue",     "green",
    "white",   "black",    "bright",   "tall",    "small",    "large",    "old",     "young",    "wooden",
    "on",      "near",     "behind",   "beside",  "under",    "in",       "holding", "wearing",  "riding",
    "speaking", "standing", "sitting", "watching", "news",    "tv",       "debate",  "speech",   "rally",
    "video",   "photo",    "report",   "with",    "and",      "at",       "of",      "after",    "before",
    "during",  "today",    "town",     "local",   "crowds",   "people",   "park",    "river",    "market"};

constexpr std::array<std::string_view, 6> kCueWords = {"shocking", "exclusive", "leaked", "secret", "hoax", "unverified"};

struct TriplePools {
  std::vector<std::string_view> subjects, relations, objects;
  std::array<std::string_view, 3> signal;
};

const TriplePools kTsgPools{
    {"man", "woman", "boy", "girl", "officer", "speaker", "reporter", "crowd", "president", "person"},
    {"holding", "wearing", "watching", "near", "behind", "beside", "on"},
    {"sign", "cup", "phone", "camera", "microphone", "flag", "banner", "hat", "book", "podium"},
    {"officer", "holding", "flag"}};

const TriplePools kVsgPools{
    {"dog", "cat", "horse", "bird", "man", "woman", "child"},
    {"on", "near", "behind", "beside", "under", "in", "riding", "sitting"},
    {"car", "bus", "bike", "truck", "table", "chair", "street", "road", "tree", "stage"},
    {"dog", "riding", "bus"}};

constexpr std::array<std::string_view, 8> kAttributes = {"red", "blue", "green", "white", "black", "tall", "small", "old"};

struct Colour {
  int r, g, b;
};
constexpr std::array<Colour, 5> kPalette = {{{200, 40, 40}, {40, 170, 60}, {30, 40, 200}, {240, 220, 40}, {120, 60, 160}}};
constexpr Colour kCheckA{240, 220, 40};
constexpr Colour kCheckB{30, 40, 200};

enum Channel : unsigned { kTextCh = 1, kImageCh = 2, kTsgCh = 4, kVsgCh = 8 };

unsigned channel_of(Signal s) {
  switch (s) {
    case Signal::kText:
      return kTextCh;
    case Signal::kImage:
      return kImageCh;
    case Signal::kTsg:
      return kTsgCh;
    case Signal::kVsg:
      return kVsgCh;
    case Signal::kMixed:
      return kTextCh | kImageCh | kTsgCh | kVsgCh;
  }
  return 0;
}

unsigned fake_channels(const SynthSpec& spec, std::size_t k) {
  if (spec.signal == Signal::kMixed) return channel_of(Signal::kMixed);
  const auto primary_slots = static_cast<std::size_t>(std::lround(spec.primary_share * 10.0));
  const std::size_t slot = k % 10;
  if (slot < primary_slots) return channel_of(spec.signal);
  std::vector<Signal> others;
  for (Signal s : {Signal::kText, Signal::kImage, Signal::kTsg, Signal::kVsg}) {
    if (s != spec.signal) others.push_back(s);
  }
  // Index among the non-primary fakes; the rotation runs across blocks.
  const std::size_t j = (k / 10) * (10 - primary_slots) + (slot - primary_slots);
  return channel_of(others[j % others.size()]);
}

template <typename Seq>
auto pick(const Seq& seq, Rng& rng) {
  return seq[rng.below(seq.size())];
}

std::string make_caption(const SynthSpec& spec, bool planted, Rng& rng) {
  const std::size_t pool = std::min(spec.vocab_size, kFiller.size());
  std::vector<std::string> words;
  const std::size_t n = 6 + rng.below(5);
  for (std::size_t i = 0; i < n; ++i) words.emplace_back(kFiller[rng.below(pool)]);
  if (planted) {
    const std::size_t a = rng.below(kCueWords.size());
    std::size_t b = rng.below(kCueWords.size() - 1);
    if (b >= a) ++b;
    for (std::size_t cue : {a, b}) {
      const std::size_t at = rng.below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), std::string(kCueWords[cue]));
    }
  }
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

SceneGraph make_graph(const SynthSpec& spec, const TriplePools& pools, bool planted, scenegraph::Modality modality,
                      Rng& rng) {
  const std::size_t n = spec.min_triples + rng.below(spec.max_triples - spec.min_triples + 1);
  std::vector<std::array<std::string_view, 3>> triples;
  for (std::size_t i = 0; i < n; ++i) {
    std::array<std::string_view, 3> t;
    do {
      t = {pick(pools.subjects, rng), pick(pools.relations, rng), pick(pools.objects, rng)};
    } while (t == pools.signal);
    triples.push_back(t);
  }
  if (planted) triples[rng.below(n)] = pools.signal;

  SceneGraph g;
  g.modality = modality;
  auto add = [&](NodeKind kind, std::string_view label) {
    g.nodes.push_back({g.nodes.size(), kind, std::string(label)});
    return g.nodes.size() - 1;
  };
  for (const auto& t : triples) {
    const auto s = add(NodeKind::kObject, t[0]);
    const auto r = add(NodeKind::kRelationship, t[1]);
    const auto o = add(NodeKind::kObject, t[2]);
    g.edges.push_back({s, r});
    g.edges.push_back({r, o});
    if (rng.uniform() < 0.3) {
      const auto a = add(NodeKind::kAttribute, pick(kAttributes, rng));
      g.edges.push_back({o, a});
    }
  }
  scenegraph::canonicalize(g);
  return g;
}

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

tem::Image make_image(const SynthSpec& spec, bool planted, Rng& rng) {
  const std::size_t s = spec.image_size;
  tem::Image img{s, s, std::vector<std::uint8_t>(s * s * 3)};
  const double base = rng.uniform(60.0, 180.0);
  for (auto& px : img.rgb) px = clamp_byte(base + rng.uniform(-25.0, 25.0));

  const std::size_t cells = s / tem::kPatchSize;
  auto paint = [&](std::size_t patch, auto&& colour_at, double noise) {
    const std::size_t py = patch / cells * tem::kPatchSize, px0 = patch % cells * tem::kPatchSize;
    for (std::size_t y = 0; y < tem::kPatchSize; ++y) {
      for (std::size_t x = 0; x < tem::kPatchSize; ++x) {
        const Colour c = colour_at(x, y);
        const std::size_t at = ((py + y) * s + px0 + x) * 3;
        img.rgb[at] = clamp_byte(c.r + rng.uniform(-noise, noise));
        img.rgb[at + 1] = clamp_byte(c.g + rng.uniform(-noise, noise));
        img.rgb[at + 2] = clamp_byte(c.b + rng.uniform(-noise, noise));
      }
    }
  };
  const std::size_t blocks = 1 + rng.below(2);
  for (std::size_t i = 0; i < blocks; ++i) {
    const Colour c = pick(kPalette, rng);
    paint(rng.below(cells * cells), [c](std::size_t, std::size_t) { return c; }, 15.0);
  }
  if (planted) {
    paint(rng.below(cells * cells),
          [](std::size_t x, std::size_t y) { return ((x / 4 + y / 4) % 2 == 0) ? kCheckA : kCheckB; }, 10.0);
  }
  return img;
}

}  // namespace

void SynthSpec::validate() const {
  if (n_train == 0) throw ConfigError("synth: n_train must be positive");
  if (!(balance >= 0.0 && balance <= 1.0)) throw ConfigError("synth: balance must lie in [0, 1]");
  if (!(primary_share >= 0.0 && primary_share <= 1.0)) throw ConfigError("synth: primary_share must lie in [0, 1]");
  if (image_size == 0 || image_size % tem::kPatchSize != 0) {
    throw ConfigError("synth: image_size must be a positive multiple of " + std::to_string(tem::kPatchSize));
  }
  if (min_triples == 0 || min_triples > max_triples) throw ConfigError("synth: need 1 <= min_triples <= max_triples");
  if (vocab_size < 2) throw ConfigError("synth: vocab_size must be at least 2");
}

SynthDataset generate_synth(const SynthSpec& spec) {
  spec.validate();
  SynthDataset out;
  for (model::Split split : {model::Split::kTrain, model::Split::kTest}) {
    const std::size_t n = split == model::Split::kTrain ? spec.n_train : spec.n_test;
    const auto split_key = static_cast<std::uint64_t>(split);
    const auto n_fake = static_cast<std::size_t>(std::lround(static_cast<double>(n) * spec.balance));
    std::vector<int> labels(n, 0);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_fake), 1);
    Rng label_rng(numkit::hash_key({spec.seed, split_key, 0x1abe1}));
    label_rng.shuffle(labels);

    std::size_t fake_index = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng(numkit::hash_key({spec.seed, split_key, i}));
      const unsigned ch = labels[i] ? fake_channels(spec, fake_index++) : 0u;
      char id[32];
      std::snprintf(id, sizeof id, "%s-%04zu", split == model::Split::kTrain ? "train" : "test", i);

      model::Example ex;
      ex.id = id;
      ex.label = labels[i];
      ex.split = split;
      ex.text = make_caption(spec, ch & kTextCh, rng);
      ex.image = make_image(spec, ch & kImageCh, rng);
      ex.tsg = make_graph(spec, kTsgPools, ch & kTsgCh, scenegraph::Modality::kText, rng);
      ex.vsg = make_graph(spec, kVsgPools, ch & kVsgCh, scenegraph::Modality::kVisual, rng);

      ManifestRecord r;
      r.id = ex.id;
      r.text = ex.text;
      r.image_path = "images/" + ex.id + ".ppm";
      r.tsg_path = "graphs/" + ex.id + "_tsg.json";
      r.vsg_path = "graphs/" + ex.id + "_vsg.json";
      r.label = ex.label;
      r.split = split;
      out.records.push_back(std::move(r));
      out.examples.push_back(std::move(ex));
    }
  }
  return out;
}

std::string spec_to_json(const SynthSpec& spec) {
  nlohmann::ordered_json j;
  j["n_train"] = spec.n_train;
  j["n_test"] = spec.n_test;
  j["balance"] = spec.balance;
  j["seed"] = spec.seed;
  j["signal"] = to_string(spec.signal);
  j["primary_share"] = spec.primary_share;
  j["vocab_size"] = spec.vocab_size;
  j["image_size"] = spec.image_size;
  j["min_triples"] = spec.min_triples;
  j["max_triples"] = spec.max_triples;
  return j.dump(2) + "\n";
}

SynthDataset gen_synth(const SynthSpec& spec, const fs::path& dir) {
  auto data = generate_synth(spec);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    const auto& ex = data.examples[i];
    write_file(dir / r.image_path, tem::encode_ppm(ex.image));
    write_file(dir / r.tsg_path, scenegraph::serialize_scene_graph(ex.tsg));
    write_file(dir / r.vsg_path, scenegraph::serialize_scene_graph(ex.vsg));
  }
  write_manifest(dir / "manifest.jsonl", data.records);
  write_file(dir / "synth_spec.json", spec_to_json(spec));
  return data;
}

double bow_probe_accuracy(const std::vector<model::Example>& examples) {
  std::map<std::string, std::size_t> index;
  for (const auto& ex : examples) {
    if (ex.split != model::Split::kTrain) continue;
    for (const auto& t : tem::tokenize(ex.text)) index.emplace(t, index.size());
  }
  auto features = [&](const model::Example& ex) {
    std::vector<double> x(index.size() + 1, 0.0);
    x.back() = 1.0;
    for (const auto& t : tem::tokenize(ex.text)) {
      if (auto it = index.find(t); it != index.end()) x[it->second] = 1.0;
    }
    return x;
  };
  std::vector<std::vector<double>> xs;
  std::vector<double> ys;
  for (const auto& ex : examples) {
    if (ex.split != model::Split::kTrain) continue;
    xs.push_back(features(ex));
    ys.push_back(ex.label);
  }
  if (xs.empty()) throw EvaluationError("bow probe: no training examples");

  std::vector<double> w(index.size() + 1, 0.0);
  const double lr = 0.5, l2 = 1e-4;
  for (int iter = 0; iter < 400; ++iter) {
    std::vector<double> grad(w.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double z = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * xs[i][k];
      const double err = 1.0 / (1.0 + std::exp(-z)) - ys[i];
      for (std::size_t k = 0; k < w.size(); ++k) grad[k] += err * xs[i][k];
    }
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= lr * (grad[k] / static_cast<double>(xs.size()) + l2 * w[k]);
  }

  std::size_t correct = 0, total = 0;
  for (const auto& ex : examples) {
    if (ex.split != model::Split::kTest) continue;
    const auto x = features(ex);
    double z = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) z += w[k] * x[k];
    correct += ((z >= 0.0 ? 1 : 0) == ex.label);
    ++total;
  }
  if (total == 0) throw EvaluationError("bow probe: no test examples");
  return static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace sgmm::harness
