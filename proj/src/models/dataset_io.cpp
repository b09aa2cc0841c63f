#include "gibbs/models/dataset_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "json.hpp"

namespace gibbs::models {

namespace {

using nlohmann::json;

std::vector<double> parse_row(const std::string& line, const std::filesystem::path& path, std::size_t row) {
  std::vector<double> values;
  std::stringstream stream(line);
  std::string cell;
  while (std::getline(stream, cell, ',')) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str())
      throw IoError(fmt::format("{}: row {}: cannot parse '{}' as a number", path.string(), row + 1, cell));
    values.push_back(v);
  }
  return values;
}

void write_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t k = 0; k < values.size(); ++k) out << (k ? "," : "") << fmt::format("{:.17g}", values[k]);
  out << '\n';
}

}  // namespace

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  write_row(out, data.grid());
  for (std::size_t i = 0; i < data.size(); ++i) write_row(out, data.observation(i));
  if (!out) throw IoError(fmt::format("failed writing '{}'", path.string()));
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw IoError(fmt::format("'{}' is empty", path.string()));
  auto grid = parse_row(line, path, 0);
  std::vector<std::vector<double>> rows;
  for (std::size_t row = 1; std::getline(in, line); ++row) {
    if (line.empty()) continue;
    rows.push_back(parse_row(line, path, row));
  }
  DatasetMetadata metadata;
  if (std::filesystem::exists(sidecar_path(path))) metadata = read_dataset_sidecar(sidecar_path(path));
  try {
    return Dataset(std::move(rows), std::move(grid), std::move(metadata));
  } catch (const Error& e) {
    throw IoError(fmt::format("'{}' is not a valid dataset: {}", path.string(), e.what()));
  }
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void write_dataset_sidecar(const Dataset& data, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = 1;
  j["n"] = data.size();
  j["d"] = data.dimension();
  j["seed"] = data.metadata().seed ? json(*data.metadata().seed) : json(nullptr);
  j["noise"] = data.metadata().noise_description;
  j["truth"] = data.metadata().truth ? json(*data.metadata().truth) : json(nullptr);
  j["content_hash"] = data.content_hash();
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out << j.dump(2) << '\n';
}

DatasetMetadata read_dataset_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  try {
    const json j = json::parse(in);
    DatasetMetadata meta;
    if (j.contains("seed") && !j["seed"].is_null()) meta.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("noise")) meta.noise_description = j["noise"].get<std::string>();
    if (j.contains("truth") && !j["truth"].is_null()) meta.truth = j["truth"].get<std::vector<double>>();
    return meta;
  } catch (const json::exception& e) {
    throw IoError(fmt::format("malformed sidecar '{}': {}", path.string(), e.what()));
  }
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv_path) {
  write_dataset_csv(data, csv_path);
  write_dataset_sidecar(data, sidecar_path(csv_path));
}

Dataset load_dataset(const std::filesystem::path& csv_path) { return read_dataset_csv(csv_path); }

}  // namespace gibbs::models
