#include "gcntrack/config.hpp"

#include <fstream>

#include "gcntrack/errors.hpp"

namespace gcntrack {

void to_json(nlohmann::json& j, const TrackerConfig& c) {
  j = nlohmann::json{{"sigma", c.sigma},
                     {"lambda1", c.lambda1},
                     {"lambda2", c.lambda2},
                     {"alpha", c.alpha},
                     {"beta", c.beta},
                     {"min_error", c.min_error},
                     {"max_iter", c.max_iter},
                     {"ridge", c.ridge},
                     {"target_superpixels", c.target_superpixels},
                     {"min_superpixel_area", c.min_superpixel_area},
                     {"region_expand", c.region_expand},
                     {"fallback_expand", c.fallback_expand},
                     {"mask_threshold", c.mask_threshold},
                     {"propagation_mode", std::string(to_string(c.propagation_mode))},
                     {"fidelity", std::string(to_string(c.fidelity))},
                     {"spatial_topology", std::string(to_string(c.topology))},
                     {"slic_compactness", c.slic.compactness},
                     {"slic_iterations", c.slic.iterations},
                     {"flow_smoothness", c.flow.smoothness},
                     {"flow_levels", c.flow.levels},
                     {"flow_iterations", c.flow.iterations}};
}

void from_json(const nlohmann::json& j, TrackerConfig& c) {
  if (!j.is_object()) throw InputError("tracker config must be a JSON object");
  c.sigma = j.value("sigma", c.sigma);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.min_error = j.value("min_error", c.min_error);
  c.max_iter = j.value("max_iter", c.max_iter);
  c.ridge = j.value("ridge", c.ridge);
  c.target_superpixels = j.value("target_superpixels", c.target_superpixels);
  c.min_superpixel_area = j.value("min_superpixel_area", c.min_superpixel_area);
  c.region_expand = j.value("region_expand", c.region_expand);
  c.fallback_expand = j.value("fallback_expand", c.fallback_expand);
  c.mask_threshold = j.value("mask_threshold", c.mask_threshold);
  if (j.contains("propagation_mode")) {
    c.propagation_mode = parse_propagation_mode(j.at("propagation_mode").get<std::string>());
  }
  if (j.contains("fidelity")) c.fidelity = parse_fidelity(j.at("fidelity").get<std::string>());
  if (j.contains("spatial_topology")) {
    c.topology = parse_spatial_topology(j.at("spatial_topology").get<std::string>());
  }
  c.slic.compactness = j.value("slic_compactness", c.slic.compactness);
  c.slic.iterations = j.value("slic_iterations", c.slic.iterations);
  c.flow.smoothness = j.value("flow_smoothness", c.flow.smoothness);
  c.flow.levels = j.value("flow_levels", c.flow.levels);
  c.flow.iterations = j.value("flow_iterations", c.flow.iterations);
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{{"tracker", c.tracker},
                     {"sequence_root", c.sequence_root.string()},
                     {"flow_dir", c.flow_dir.string()},
                     {"output_dir", c.output_dir.string()},
                     {"jobs", c.jobs}};
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw InputError("run config must be a JSON object");
  if (j.contains("tracker")) j.at("tracker").get_to(c.tracker);
  c.sequence_root = j.value("sequence_root", c.sequence_root.string());
  c.flow_dir = j.value("flow_dir", c.flow_dir.string());
  c.output_dir = j.value("output_dir", c.output_dir.string());
  c.jobs = j.value("jobs", c.jobs);
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  RunConfig config;
  try {
    nlohmann::json::parse(in).get_to(config);
  } catch (const nlohmann::json::exception& e) {
    throw InputError("config " + path.string() + ": " + e.what());
  }
  return config;
}

}  // namespace gcntrack
