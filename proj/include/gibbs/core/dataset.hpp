#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gibbs {

struct DatasetMetadata {
  std::optional<std::uint64_t> seed;
  std::string noise_description;
  std::optional<std::vector<double>> truth;
};

/// n observation vectors in R^d sharing a strictly increasing evaluation grid.
class Dataset {
 public:
  Dataset(std::vector<std::vector<double>> observations, std::vector<double> grid,
          DatasetMetadata metadata = {});

  std::size_t size() const noexcept { return n_; }
  std::size_t dimension() const noexcept { return grid_.size(); }

  std::span<const double> observation(std::size_t i) const {
    return {values_.data() + i * grid_.size(), grid_.size()};
  }
  const std::vector<double>& grid() const noexcept { return grid_; }
  const DatasetMetadata& metadata() const noexcept { return metadata_; }

  std::vector<std::vector<double>> observations() const;

  /// Observations reordered so that row k of the result is row order[k] of this.
  Dataset permuted(std::span<const std::size_t> order) const;
  /// The dataset with observation i removed (requires n >= 2).
  Dataset without(std::size_t i) const;
  /// Every observation shifted by the same vector.
  Dataset shifted(std::span<const double> offset) const;

  /// SHA-256 (hex) over the grid and observation bit patterns.
  std::string content_hash() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
  std::vector<double> grid_;
  DatasetMetadata metadata_;
};

}  // namespace gibbs
