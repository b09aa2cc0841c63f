#include "gibbs/app/config.hpp"

#include <fmt/format.h>

#include "gibbs/core/errors.hpp"
#include "gibbs/core/risk.hpp"
#include "gibbs/models/dataset_io.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/models/surrogate.hpp"
#include "json.hpp"

namespace gibbs::app {

namespace {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

smc::WGrid GridSpecConfig::build() const {
  if (kind == "dyadic") return smc::WGrid::dyadic(min_exponent);
  if (kind == "uniform") return smc::WGrid::uniform(count);
  if (kind == "custom") return smc::WGrid(values);
  throw ConfigurationError(fmt::format("unknown W grid kind '{}' (dyadic, uniform, custom)", kind));
}

std::string RunConfig::to_json() const {
  json noise{{"kind", models::to_string(dataset.noise.kind)},
             {"sigma", dataset.noise.sigma},
             {"length_scale", dataset.noise.length_scale}};
  if (dataset.noise_seed) noise["seed"] = *dataset.noise_seed;
  json j{{"name", name},
         {"model", model},
         {"dataset",
          {{"source", dataset.source},
           {"path", dataset.path},
           {"n", dataset.n},
           {"d", dataset.d},
           {"source_points", dataset.source_points},
           {"blocks", dataset.blocks},
           {"truth", dataset.truth},
           {"noise", noise},
           {"zero_noise", dataset.zero_noise},
           {"observations", dataset.observations}}},
         {"losses", losses},
         {"loss_scale", loss_scale ? json(*loss_scale) : json("auto")},
         {"prior", {{"mean", prior_mean}, {"sd", prior_sd}}},
         {"grid", {{"kind", grid.kind}, {"min_exponent", grid.min_exponent}, {"count", grid.count}, {"values", grid.values}}},
         {"particles", particles},
         {"mh_steps", mh_steps},
         {"ess_threshold", ess_threshold},
         {"seed", seed},
         {"rule", calib::to_string(rule)},
         {"bayes", bayes},
         {"plots", plots},
         {"out", out}};
  return j.dump(2) + "\n";
}

RunConfig RunConfig::from_json(const std::string& text) {
  return apply_json(RunConfig{}, text);
}

RunConfig apply_json(RunConfig c, const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigurationError(fmt::format("config is not valid JSON: {}", e.what()));
  }
  try {
    read(j, "name", c.name);
    read(j, "model", c.model);
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      read(d, "source", c.dataset.source);
      read(d, "path", c.dataset.path);
      read(d, "n", c.dataset.n);
      read(d, "d", c.dataset.d);
      read(d, "source_points", c.dataset.source_points);
      read(d, "blocks", c.dataset.blocks);
      read(d, "truth", c.dataset.truth);
      read(d, "zero_noise", c.dataset.zero_noise);
      read(d, "observations", c.dataset.observations);
      if (d.contains("noise")) {
        const auto& nz = d.at("noise");
        if (nz.contains("kind")) c.dataset.noise.kind = models::noise_kind_from_string(nz.at("kind").get<std::string>());
        read(nz, "sigma", c.dataset.noise.sigma);
        read(nz, "length_scale", c.dataset.noise.length_scale);
        if (nz.contains("seed")) c.dataset.noise_seed = nz.at("seed").get<std::uint64_t>();
      }
    }
    read(j, "losses", c.losses);
    if (j.contains("loss_scale")) {
      const auto& s = j.at("loss_scale");
      if (s.is_string() && s.get<std::string>() == "auto") c.loss_scale.reset();
      else c.loss_scale = s.get<double>();
    }
    if (j.contains("prior")) {
      read(j.at("prior"), "mean", c.prior_mean);
      read(j.at("prior"), "sd", c.prior_sd);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      read(g, "kind", c.grid.kind);
      read(g, "min_exponent", c.grid.min_exponent);
      read(g, "count", c.grid.count);
      read(g, "values", c.grid.values);
    }
    read(j, "particles", c.particles);
    read(j, "mh_steps", c.mh_steps);
    read(j, "ess_threshold", c.ess_threshold);
    read(j, "seed", c.seed);
    if (j.contains("rule")) c.rule = calib::selection_rule_from_string(j.at("rule").get<std::string>());
    read(j, "bayes", c.bayes);
    read(j, "plots", c.plots);
    read(j, "out", c.out);
  } catch (const json::exception& e) {
    throw ConfigurationError(fmt::format("config field has the wrong type: {}", e.what()));
  }
  return c;
}

void RunConfig::validate() const {
  if (model != "toy-fredholm" && model != "surrogate-waveguide" && model != "identity")
    throw ConfigurationError(fmt::format("unknown model '{}' (toy-fredholm, surrogate-waveguide, identity)", model));
  if (dataset.source != "simulate" && dataset.source != "csv")
    throw ConfigurationError(fmt::format("dataset source must be 'simulate' or 'csv', got '{}'", dataset.source));
  if (dataset.source == "csv" && dataset.path.empty()) throw ConfigurationError("dataset source 'csv' needs a path");
  if (losses.empty()) throw ConfigurationError("at least one loss is required");
  for (const auto& l : losses) {
    const auto names = models::builtin_loss_names();
    if (std::find(names.begin(), names.end(), l) == names.end())
      throw ConfigurationError(fmt::format("unknown loss '{}'", l));
  }
  if (loss_scale && !(*loss_scale > 0.0)) throw ConfigurationError("loss_scale must be positive or 'auto'");
  if (!(prior_sd > 0.0)) throw ConfigurationError("prior sd must be positive");
  if (out.empty()) throw ConfigurationError("output directory must be set");
  filter_config().validate();
}

smc::FilterConfig RunConfig::filter_config() const {
  smc::FilterConfig f;
  f.grid = grid.build();
  f.particles = particles;
  f.mh_steps = mh_steps;
  f.ess_threshold = ess_threshold;
  f.seed = seed;
  return f;
}

std::vector<std::string> preset_names() { return {"toy-fredholm", "surrogate-waveguide", "conjugate"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  c.name = name;
  if (name == "toy-fredholm") return c;
  if (name == "surrogate-waveguide") {
    c.model = "surrogate-waveguide";
    c.dataset.n = 5;
    c.dataset.d = 40;
    c.dataset.truth = {30.0, 5.5, 2.8};
    c.dataset.noise = {models::NoiseKind::AdditiveGaussian, 0.11, 0.2, 0};
    c.losses = {"squared-l2", "l1"};
    return c;
  }
  if (name == "conjugate") {
    c.model = "identity";
    c.dataset.n = 1;
    c.dataset.d = 1;
    c.dataset.truth = {1.0};
    c.dataset.noise = {models::NoiseKind::AdditiveGaussian, 0.0, 0.2, 0};
    c.dataset.observations = {{1.0}};
    c.losses = {"squared-l2"};
    c.loss_scale = 1.0;
    c.rule = calib::SelectionRule::Min;
    return c;
  }
  throw ConfigurationError(fmt::format("unknown preset '{}' (toy-fredholm, surrogate-waveguide, conjugate)", name));
}

std::shared_ptr<const ForwardModel> make_forward(const RunConfig& config, const std::vector<double>& grid) {
  if (config.model == "toy-fredholm")
    return std::make_shared<models::FredholmForwardModel>(
        models::SmoothingKernelOperator(grid, config.dataset.source_points), config.dataset.blocks);
  if (config.model == "surrogate-waveguide") return std::make_shared<models::SurrogateDispersionModel>(grid);
  if (config.model == "identity") return std::make_shared<models::IdentityForwardModel>(grid.size());
  throw ConfigurationError(fmt::format("unknown model '{}'", config.model));
}

std::shared_ptr<const PriorModel> make_prior(const RunConfig& config) {
  if (config.model == "toy-fredholm") return models::fredholm_prior(config.dataset.blocks);
  if (config.model == "surrogate-waveguide") return models::surrogate_prior();
  return std::make_shared<models::GaussianPrior>(config.prior_mean, config.prior_sd, config.dataset.d);
}

Dataset materialize_dataset(const RunConfig& config) {
  if (config.dataset.source == "csv") return models::load_dataset(config.dataset.path);
  const auto& spec = config.dataset;
  if (!spec.observations.empty()) {
    const std::size_t d = spec.observations.front().size();
    return Dataset(spec.observations, d == 1 ? std::vector<double>{0.0} : models::unit_grid(d));
  }
  auto noise = spec.noise;
  noise.seed = config.noise_seed();
  if (spec.zero_noise) noise.sigma = 0.0;
  const ParameterVector truth(spec.truth);
  if (config.model == "toy-fredholm") {
    const models::SmoothingKernelOperator op(models::unit_grid(spec.d), spec.source_points);
    return models::simulate_toy_dataset(truth, noise, spec.n, op, spec.blocks);
  }
  const auto grid = config.model == "surrogate-waveguide" ? models::SurrogateDispersionModel::default_frequencies(spec.d)
                                                          : models::unit_grid(spec.d);
  const auto forward = make_forward(config, grid);
  return models::simulate_curves(*forward, truth, noise, spec.n, grid);
}

std::shared_ptr<const LossModel> make_loss(const RunConfig& config, const std::string& name, const Dataset& data) {
  const double scale = config.loss_scale ? *config.loss_scale : loss_scale_estimate(data);
  return models::make_loss(name, make_forward(config, data.grid()), scale);
}

}  // namespace gibbs::app
