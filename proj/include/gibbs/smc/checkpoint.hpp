#pragma once

#include <filesystem>
#include <string>

#include "gibbs/smc/particles.hpp"

namespace gibbs::smc {

inline constexpr int kCheckpointSchemaVersion = 1;

/// JSON document for one particle system. Non-finite numbers are written as
/// the strings "inf", "-inf" and "nan"; finite values round-trip exactly.
std::string checkpoint_to_json(const ParticleSystem& ps, const std::string& dataset_hash);
/// Throws ProvenanceError if the document was written for a different dataset,
/// IoError if it is malformed or from another schema version.
ParticleSystem checkpoint_from_json(const std::string& text, const std::string& dataset_hash);

void save_checkpoint(const ParticleSystem& ps, const std::string& dataset_hash, const std::filesystem::path& path);
ParticleSystem load_checkpoint(const std::filesystem::path& path, const std::string& dataset_hash);

}  // namespace gibbs::smc
