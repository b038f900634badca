#pragma once

#include <string>
#include <vector>

#include "sgmm/explain/attribution.hpp"

namespace sgmm::explain {

// Highlight strength from |phi| relative to the largest |phi| in the report:
// 0 none, 1 weak, 2 medium, 3 strong.
struct Highlight {
  int level = 0;
  bool fake = false;  // phi > 0 supports the fake label

  // "none", or "fake-<level>" / "real-<level>".
  std::string css_class() const;
  // Display colour: fake blue (strong) or green, real red (strong) or orange.
  std::string colour() const;
};

std::vector<Highlight> highlights(const std::vector<double>& phi);

// {base_value, full_value, method, [n_samples, seed,] [warnings,] players:
// [{kind, index, text_or_coords, phi, [stderr,] highlight, colour}]},
// two-space indent with a trailing newline.
std::string render_json(const AttributionReport& report);

// One line per segment; each unit carries a marker such as "[+++]" or "[-]".
std::string render_text(const AttributionReport& report);

}  // namespace sgmm::explain
