#include "gibbs/core/dataset.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "gibbs/core/errors.hpp"

namespace gibbs {

Dataset::Dataset(std::vector<std::vector<double>> observations, std::vector<double> grid,
                 DatasetMetadata metadata)
    : n_(observations.size()), grid_(std::move(grid)), metadata_(std::move(metadata)) {
  if (n_ == 0) throw DomainError("Dataset: need at least one observation");
  if (grid_.empty()) throw DomainError("Dataset: empty evaluation grid");
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    if (!(grid_[k] > grid_[k - 1])) throw DomainError("Dataset: grid must be strictly increasing");
  }
  values_.reserve(n_ * grid_.size());
  for (std::size_t i = 0; i < n_; ++i) {
    if (observations[i].size() != grid_.size())
      throw DomainError(fmt::format("Dataset: observation {} has dimension {}, grid has {}", i,
                                    observations[i].size(), grid_.size()));
    values_.insert(values_.end(), observations[i].begin(), observations[i].end());
  }
}

std::vector<std::vector<double>> Dataset::observations() const {
  std::vector<std::vector<double>> rows;
  rows.reserve(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    auto row = observation(i);
    rows.emplace_back(row.begin(), row.end());
  }
  return rows;
}

Dataset Dataset::permuted(std::span<const std::size_t> order) const {
  if (order.size() != n_) throw DomainError("Dataset::permuted: order has wrong length");
  std::vector<std::vector<double>> rows;
  rows.reserve(n_);
  for (std::size_t k : order) {
    if (k >= n_) throw DomainError("Dataset::permuted: index out of range");
    auto row = observation(k);
    rows.emplace_back(row.begin(), row.end());
  }
  return Dataset(std::move(rows), grid_, metadata_);
}

Dataset Dataset::without(std::size_t i) const {
  if (n_ < 2) throw DomainError("Dataset::without: cannot remove the only observation");
  auto rows = observations();
  rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(i));
  return Dataset(std::move(rows), grid_, metadata_);
}

Dataset Dataset::shifted(std::span<const double> offset) const {
  if (offset.size() != dimension()) throw DomainError("Dataset::shifted: offset has wrong length");
  auto rows = observations();
  for (auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) row[k] += offset[k];
  }
  return Dataset(std::move(rows), grid_, metadata_);
}

std::string Dataset::content_hash() const {
  std::vector<unsigned char> bytes;
  bytes.reserve(8 * (2 + grid_.size() + values_.size()));
  auto push = [&bytes](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
  };
  push(n_);
  push(grid_.size());
  for (double g : grid_) push(std::bit_cast<std::uint64_t>(g));
  for (double v : values_) push(std::bit_cast<std::uint64_t>(v));

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
    throw Error("Dataset::content_hash: SHA-256 failed");
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int k = 0; k < length; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

}  // namespace gibbs
