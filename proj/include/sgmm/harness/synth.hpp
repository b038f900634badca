#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgmm/harness/dataset.hpp"
#include "sgmm/model/example.hpp"

namespace sgmm::harness {

enum class Signal { kText, kImage, kTsg, kVsg, kMixed };

std::string_view to_string(Signal s);
Signal parse_signal(std::string_view s);

// Fake examples carry a planted pattern in the signal modality; everything
// else is drawn from one distribution for both classes.
//   text:  two cue words from a set real captions never use
//   image: a fixed two-colour checkerboard patch
//   tsg:   the triple (officer, holding, flag); its parts appear in real
//          graphs too, only the combination is planted
//   vsg:   the triple (dog, riding, bus), likewise
//   mixed: all four at once
// With primary_share < 1, fake k of each split (k mod 10 >= share * 10)
// carries the pattern in one of the other three single modalities instead,
// cycling through them in order of appearance.
struct SynthSpec {
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  double balance = 0.5;  // fraction of fakes per split
  std::uint64_t seed = 1;
  Signal signal = Signal::kMixed;
  double primary_share = 1.0;
  std::size_t vocab_size = 60;  // filler words available to captions
  std::size_t image_size = 32;
  std::size_t min_triples = 2;
  std::size_t max_triples = 4;

  // ConfigError on an invalid combination.
  void validate() const;
};

struct SynthDataset {
  std::vector<ManifestRecord> records;
  std::vector<model::Example> examples;  // same order as records
};

// In-memory generation; deterministic in the spec.
SynthDataset generate_synth(const SynthSpec& spec);

// Writes manifest.jsonl, images/, graphs/ and synth_spec.json under `dir`.
// IoError when the directory cannot be written.
SynthDataset gen_synth(const SynthSpec& spec, const std::filesystem::path& dir);

std::string spec_to_json(const SynthSpec& spec);

// Held-out accuracy of a bag-of-words logistic regression trained on the
// train split captions and scored on the test split.
double bow_probe_accuracy(const std::vector<model::Example>& examples);

}  // namespace sgmm::harness
