#include "sgmm/explain/report.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace sgmm::explain {

std::string Highlight::css_class() const {
  if (level == 0) return "none";
  return (fake ? "fake-" : "real-") + std::to_string(level);
}

std::string Highlight::colour() const {
  if (level == 0) return "none";
  if (fake) return level == 3 ? "blue" : "green";
  return level == 3 ? "red" : "orange";
}

std::vector<Highlight> highlights(const std::vector<double>& phi) {
  double top = 0.0;
  for (double v : phi) top = std::max(top, std::abs(v));
  std::vector<Highlight> out(phi.size());
  if (top == 0.0) return out;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    if (phi[i] == 0.0) continue;
    const double ratio = std::abs(phi[i]) / top;
    out[i].level = ratio >= 2.0 / 3.0 ? 3 : ratio >= 1.0 / 3.0 ? 2 : 1;
    out[i].fake = phi[i] > 0.0;
  }
  return out;
}

std::string render_json(const AttributionReport& report) {
  const auto& s = report.shapley;
  nlohmann::ordered_json j;
  j["base_value"] = s.base_value;
  j["full_value"] = s.full_value;
  j["method"] = s.method;
  if (s.method == "permutation") {
    j["n_samples"] = s.n_samples;
    j["seed"] = s.seed;
    j["enumerated"] = s.enumerated;
  }
  if (!s.warnings.empty()) j["warnings"] = s.warnings;
  const auto marks = highlights(s.phi);
  auto players = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < report.players.size(); ++i) {
    const Player& p = report.players[i];
    nlohmann::ordered_json e;
    e["kind"] = to_string(p.kind);
    e["index"] = p.index;
    e["text_or_coords"] = p.text;
    e["phi"] = s.phi[i];
    if (!s.std_error.empty()) e["stderr"] = s.std_error[i];
    e["highlight"] = marks[i].css_class();
    e["colour"] = marks[i].colour();
    players.push_back(std::move(e));
  }
  j["players"] = std::move(players);
  return j.dump(2) + "\n";
}

std::string render_text(const AttributionReport& report) {
  const auto& s = report.shapley;
  const auto marks = highlights(s.phi);
  char head[160];
  std::snprintf(head, sizeof head, "method %s  base %.6f  full %.6f\n", s.method.c_str(), s.base_value,
                s.full_value);
  std::string out = head;
  const PlayerKind kinds[] = {PlayerKind::kToken, PlayerKind::kPatch, PlayerKind::kTsgNode, PlayerKind::kVsgNode};
  const char* titles[] = {"text", "image", "tsg", "vsg"};
  for (std::size_t k = 0; k < 4; ++k) {
    std::string line;
    for (std::size_t i = 0; i < report.players.size(); ++i) {
      if (report.players[i].kind != kinds[k]) continue;
      line += ' ';
      line += report.players[i].text;
      if (marks[i].level > 0) {
        line += '[' + std::string(static_cast<std::size_t>(marks[i].level), marks[i].fake ? '+' : '-') + ']';
      }
    }
    if (!line.empty()) out += std::string(titles[k]) + ":" + line + "\n";
  }
  return out;
}

}  // namespace sgmm::explain
