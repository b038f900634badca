#include "sgmm/harness/gradient_suite.hpp"

#include <map>

#include "sgmm/model/model.hpp"

namespace sgmm::harness {

using scenegraph::NodeKind;

bool GradientSuiteResult::passed() const {
  for (const auto& g : groups) {
    if (!(g.max_rel_error <= tolerance)) return false;
  }
  return !groups.empty();
}

std::string parameter_group(const std::string& name) {
  const auto first = name.find('.');
  if (first == std::string::npos) return name;
  const std::string head = name.substr(0, first);
  if (head == "head") return head;
  const auto second = name.find('.', first + 1);
  return second == std::string::npos ? name : name.substr(0, second);
}

namespace {

model::Example instance() {
  model::Example ex;
  ex.id = "gradcheck";
  ex.text = "officer flag";
  ex.image = tem::Image{16, 16, std::vector<std::uint8_t>(16 * 16 * 3)};
  for (std::size_t i = 0; i < ex.image.rgb.size(); ++i) ex.image.rgb[i] = static_cast<std::uint8_t>((i * 53 + 7) % 256);
  ex.tsg.nodes = {{0, NodeKind::kObject, "officer"}, {1, NodeKind::kRelationship, "holding"}, {2, NodeKind::kObject, "flag"}};
  ex.tsg.edges = {{0, 1}, {1, 2}};
  ex.vsg.nodes = {{0, NodeKind::kObject, "dog"}, {1, NodeKind::kRelationship, "on"}, {2, NodeKind::kObject, "street"}};
  ex.vsg.edges = {{0, 1}, {1, 2}};
  ex.vsg.modality = scenegraph::Modality::kVisual;
  ex.label = 1;
  return ex;
}

void check_variant(model::FusionVariant fusion, double eps, GradientSuiteResult& out) {
  const auto vocab = tem::Vocabulary::build({"officer flag"}, 8);
  embeddings::WordVectorTable words(6);
  const auto example = instance();

  model::PrepareOptions options;
  options.vocab = &vocab;
  options.words = &words;
  options.fusion = fusion;
  options.max_len = 4;
  const auto prepared = model::prepare_example(example, options);

  model::ModelConfig config;
  config.tem.vocab_size = vocab.size();
  config.tem.d_model = 8;
  config.tem.n_heads = 2;
  config.tem.n_layers = 2;
  config.tem.d_ff = 6;
  config.tem.max_len = 4;
  config.graph_input_dim = words.dim();
  config.gsgm_hidden = 5;
  config.gsgm_output = 4;
  config.head_hidden = 6;
  config.fusion = fusion;
  const auto params = model::ModelParams::init(config, 20240501);

  const auto list = params.parameters();
  std::vector<std::string> names;
  for (const auto& p : list) names.push_back(p.name);
  const std::vector<const model::PreparedExample*> batch = {&prepared};
  auto loss = [&] { return model::batch_loss(params, batch, {true, 77, 3, 0}); };
  for (auto& r : numkit::check_gradients(loss, numkit::tensors(list), names, eps)) {
    out.tensors.push_back(std::move(r));
  }
}

}  // namespace

GradientSuiteResult run_gradient_suite(double eps, double tolerance) {
  GradientSuiteResult out;
  out.tolerance = tolerance;
  check_variant(model::FusionVariant::kBase, eps, out);
  const std::size_t base_count = out.tensors.size();
  check_variant(model::FusionVariant::kCmsg1, eps, out);

  std::map<std::string, GroupCheck> groups;
  std::vector<std::string> order;
  for (std::size_t i = 0; i < out.tensors.size(); ++i) {
    const auto& t = out.tensors[i];
    // The second pass shares TEM and head names; only its graph stack is new.
    std::string g = parameter_group(t.name);
    if (i >= base_count) {
      if (g.rfind("cmsg", 0) != 0) g += "[cmsg1]";
    }
    auto [it, fresh] = groups.try_emplace(g, GroupCheck{g, 0, 0.0});
    if (fresh) order.push_back(g);
    it->second.entries += t.entries;
    it->second.max_rel_error = std::max(it->second.max_rel_error, t.max_rel_error);
  }
  for (const auto& g : order) out.groups.push_back(groups[g]);
  return out;
}

}  // namespace sgmm::harness
