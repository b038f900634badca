#include "sgmm/error.hpp"

namespace sgmm {
namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string msg = std::to_string(problems.size()) + " invalid record(s)";
  for (const auto& p : problems) msg += "\n  " + p;
  return msg;
}

}  // namespace

DatasetError::DatasetError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

}  // namespace sgmm
