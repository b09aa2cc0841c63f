#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gibbs/calib/calibration.hpp"
#include "gibbs/core/contracts.hpp"
#include "gibbs/models/simulate.hpp"
#include "gibbs/smc/filter.hpp"

namespace gibbs::app {

/// Where the data come from. Fixed observations win over simulation.
struct DatasetSpec {
  std::string source = "simulate";  ///< "simulate" or "csv"
  std::string path;                 ///< CSV path when source == "csv"
  std::size_t n = 90;
  std::size_t d = 100;
  std::size_t source_points = 400;  ///< kernel quadrature nodes (toy model)
  std::size_t blocks = 4;           ///< J (toy model)
  std::vector<double> truth{4.0, 4.0, 4.0, 4.0, 0.25, 0.5, 0.75};
  models::NoiseSpec noise{models::NoiseKind::MultiplicativeLognormalBlockwise, 1.0, 0.2, 0};
  std::optional<std::uint64_t> noise_seed;  ///< defaults to the run seed
  bool zero_noise = false;
  std::vector<std::vector<double>> observations;  ///< used verbatim when non-empty
};

struct GridSpecConfig {
  std::string kind = "dyadic";  ///< dyadic | uniform | custom
  int min_exponent = -8;
  std::size_t count = 11;
  std::vector<double> values;

  smc::WGrid build() const;
};

/// Everything a command needs; serializes to one JSON document.
struct RunConfig {
  std::string name = "toy-fredholm";
  std::string model = "toy-fredholm";  ///< toy-fredholm | surrogate-waveguide | identity
  DatasetSpec dataset;
  std::vector<std::string> losses{"l1"};
  std::optional<double> loss_scale;  ///< empty: data-driven W0
  double prior_mean = 0.0;           ///< Gaussian prior (identity model only)
  double prior_sd = 1.0;
  GridSpecConfig grid;
  std::size_t particles = 2000;
  std::size_t mh_steps = 10;
  double ess_threshold = 0.5;
  std::uint64_t seed = 1;
  calib::SelectionRule rule = calib::SelectionRule::OneStandardError;
  bool bayes = false;
  bool plots = true;
  std::string out = "out";

  std::string to_json() const;
  static RunConfig from_json(const std::string& text);
  void validate() const;
  smc::FilterConfig filter_config() const;
  std::uint64_t noise_seed() const { return dataset.noise_seed.value_or(seed); }
};

/// Fields present in the JSON text override those of `base`; absent ones keep their value.
RunConfig apply_json(RunConfig base, const std::string& text);

std::vector<std::string> preset_names();
/// toy-fredholm, surrogate-waveguide or conjugate; ConfigurationError otherwise.
RunConfig preset(const std::string& name);

/// Dataset described by the config (simulated deterministically or read from CSV).
Dataset materialize_dataset(const RunConfig& config);
/// Forward model evaluated on the dataset grid.
std::shared_ptr<const ForwardModel> make_forward(const RunConfig& config, const std::vector<double>& grid);
std::shared_ptr<const PriorModel> make_prior(const RunConfig& config);
/// Named loss with the configured scale (W0 estimated from the data when unset).
std::shared_ptr<const LossModel> make_loss(const RunConfig& config, const std::string& name, const Dataset& data);

}  // namespace gibbs::app
