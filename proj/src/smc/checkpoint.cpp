#include "gibbs/smc/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "json.hpp"

namespace gibbs::smc {

namespace {

using nlohmann::json;

json encode(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) {
    if (std::isnan(v)) out.push_back("nan");
    else if (std::isinf(v)) out.push_back(v > 0 ? "inf" : "-inf");
    else out.push_back(v);
  }
  return out;
}

std::vector<double> decode(const json& values) {
  std::vector<double> out;
  for (const auto& v : values) {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "nan") out.push_back(std::numeric_limits<double>::quiet_NaN());
      else if (s == "inf") out.push_back(std::numeric_limits<double>::infinity());
      else if (s == "-inf") out.push_back(-std::numeric_limits<double>::infinity());
      else throw IoError(fmt::format("checkpoint: unexpected number '{}'", s));
    } else {
      out.push_back(v.get<double>());
    }
  }
  return out;
}

std::string target_name(Target t) { return t == Target::Mixture ? "mixture" : "full-posterior"; }

}  // namespace

std::string checkpoint_to_json(const ParticleSystem& ps, const std::string& dataset_hash) {
  json j;
  j["schema_version"] = kCheckpointSchemaVersion;
  j["dataset_hash"] = dataset_hash;
  j["w"] = ps.w();
  j["target"] = target_name(ps.target());
  j["target_index"] = ps.target_index();
  j["seed"] = ps.seed();
  j["phase"] = ps.phase();
  j["particles"] = ps.size();
  j["parameter_dimension"] = ps.parameter_dimension();
  j["data_size"] = ps.data_size();
  j["values"] = encode(ps.particle_values());
  j["log_weights"] = encode(ps.log_weights());
  j["losses"] = encode(ps.loss_matrix());
  return j.dump();
}

ParticleSystem checkpoint_from_json(const std::string& text, const std::string& dataset_hash) {
  try {
    const json j = json::parse(text);
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion)
      throw IoError(fmt::format("checkpoint schema version {} is not supported (expected {})", version,
                                kCheckpointSchemaVersion));
    const auto stored_hash = j.at("dataset_hash").get<std::string>();
    if (stored_hash != dataset_hash)
      throw ProvenanceError(fmt::format("checkpoint was written for dataset {}, not {}", stored_hash, dataset_hash));
    ParticleSystem restored(decode(j.at("values")), decode(j.at("losses")),
                            std::vector<double>(j.at("particles").get<std::size_t>(), 0.0),
                            j.at("parameter_dimension").get<std::size_t>(), j.at("data_size").get<std::size_t>());
    restored.restore_log_weights(decode(j.at("log_weights")));
    const Target target = j.at("target").get<std::string>() == "mixture" ? Target::Mixture : Target::FullPosterior;
    restored.set_target(j.at("w").get<double>(), target, j.at("target_index").get<std::size_t>());
    restored.set_seed(j.at("seed").get<std::uint64_t>(), j.at("phase").get<std::uint64_t>());
    return restored;
  } catch (const json::exception& e) {
    throw IoError(fmt::format("malformed checkpoint: {}", e.what()));
  }
}

void save_checkpoint(const ParticleSystem& ps, const std::string& dataset_hash, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << checkpoint_to_json(ps, dataset_hash) << '\n';
}

ParticleSystem load_checkpoint(const std::filesystem::path& path, const std::string& dataset_hash) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str(), dataset_hash);
}

}  // namespace gibbs::smc
