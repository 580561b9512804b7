#include <fstream>
#include <sstream>

#include "momentum/experiment.hpp"

namespace momentum::experiment {

std::string provenance_line(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "# config_hash=" << cfg.hash << " seed=" << cfg.seed << " problem_seed=" << cfg.problem_seed
     << " init_seed=" << cfg.init.seed << " lipschitz_seed=" << cfg.lipschitz.seed;
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

}  // namespace momentum::experiment
