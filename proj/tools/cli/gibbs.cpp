// gibbs: simulate data, calibrate the learning rate, sample, compare losses and
// run the quadrature verification suites.
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "gibbs/app/commands.hpp"
#include "gibbs/core/errors.hpp"

namespace {

struct Overrides {
  std::string preset;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> particles;
  std::optional<std::size_t> mh_steps;
  std::optional<double> ess_threshold;
  std::optional<std::string> rule;
  std::optional<std::string> out;
  std::vector<std::string> losses;
  bool zero_noise = false;
  bool no_plots = false;
};

// preset < config file < command-line flags
gibbs::app::RunConfig resolve(const Overrides& o) {
  auto config = gibbs::app::preset(o.preset.empty() ? "toy-fredholm" : o.preset);
  if (!o.config_path.empty()) {
    std::ifstream f(o.config_path);
    if (!f) throw gibbs::IoError("cannot read config " + o.config_path);
    std::stringstream text;
    text << f.rdbuf();
    config = gibbs::app::apply_json(std::move(config), text.str());
  }
  if (o.seed) config.seed = *o.seed;
  if (o.particles) config.particles = *o.particles;
  if (o.mh_steps) config.mh_steps = *o.mh_steps;
  if (o.ess_threshold) config.ess_threshold = *o.ess_threshold;
  if (o.rule) config.rule = gibbs::calib::selection_rule_from_string(*o.rule);
  if (o.out) config.out = *o.out;
  if (!o.losses.empty()) config.losses = o.losses;
  if (o.zero_noise) config.dataset.zero_noise = true;
  if (o.no_plots) config.plots = false;
  return config;
}

void add_common(CLI::App* cmd, Overrides& o, bool multi_loss) {
  cmd->add_option("--preset", o.preset, "toy-fredholm | surrogate-waveguide | conjugate");
  cmd->add_option("--config", o.config_path, "JSON config; overrides the preset");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--particles", o.particles, "number of particles");
  cmd->add_option("--mh-steps", o.mh_steps, "MH steps per mutation");
  cmd->add_option("--ess-threshold", o.ess_threshold, "resample when normalized ESS falls below this");
  cmd->add_option("--rule", o.rule, "min | one-se");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--zero-noise", o.zero_noise, "simulate without observation noise");
  cmd->add_flag("--no-plots", o.no_plots, "skip SVG output");
  auto* loss = cmd->add_option("--loss", o.losses, multi_loss ? "losses to compare (repeatable)" : "loss name");
  if (!multi_loss) loss->expected(1);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gibbs posterior calibration and verification"};
  app.require_subcommand(1);

  Overrides o;
  bool bayes = false;
  std::string checkpoint;
  std::string suite;

  auto* simulate = app.add_subcommand("simulate", "write a simulated dataset");
  add_common(simulate, o, false);
  auto* calibrate = app.add_subcommand("calibrate", "choose W by LOOCV risk");
  add_common(calibrate, o, false);
  auto* sample = app.add_subcommand("sample", "sample the posterior at the calibrated W");
  add_common(sample, o, false);
  sample->add_option("--checkpoint", checkpoint, "checkpoint to resume from");
  sample->add_flag("--bayes", bayes, "sample at W = 1 without calibration");
  auto* select = app.add_subcommand("select", "rank losses by cross-validated predictive score");
  add_common(select, o, true);
  auto* verify = app.add_subcommand("verify", "run a quadrature verification suite");
  add_common(verify, o, false);
  verify->add_option("suite", suite, "suite name")->required()->check(CLI::IsMember(gibbs::app::verify_suites()));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gibbs::app::kConfigurationError;
  }

  try {
    auto config = resolve(o);
    config.bayes = bayes;
    if (simulate->parsed()) return gibbs::app::cmd_simulate(config, std::cout);
    if (calibrate->parsed()) return gibbs::app::cmd_calibrate(config, std::cout);
    if (sample->parsed()) {
      std::optional<std::filesystem::path> cp;
      if (!checkpoint.empty()) cp = checkpoint;
      return gibbs::app::cmd_sample(config, cp, std::cout);
    }
    if (select->parsed()) return gibbs::app::cmd_select(config, std::cout);
    return gibbs::app::cmd_verify(config, suite, std::cout);
  } catch (...) {
    return gibbs::app::exit_code_for_current_exception(std::cerr);
  }
}
