#pragma once

#include <filesystem>

#include "gibbs/core/dataset.hpp"

namespace gibbs::models {

/// CSV: first row holds the grid, each further row one observation. Values are
/// written with 17 significant digits so a round trip is exact.
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);
/// Reads a CSV written by write_dataset_csv; metadata comes from the sidecar if present.
Dataset read_dataset_csv(const std::filesystem::path& path);

/// JSON sidecar next to the CSV: seed, noise description, truth and content hash.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);
void write_dataset_sidecar(const Dataset& data, const std::filesystem::path& path);
DatasetMetadata read_dataset_sidecar(const std::filesystem::path& path);

/// CSV plus sidecar.
void save_dataset(const Dataset& data, const std::filesystem::path& csv_path);
Dataset load_dataset(const std::filesystem::path& csv_path);

}  // namespace gibbs::models
