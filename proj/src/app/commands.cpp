#include "gibbs/app/commands.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "gibbs/app/analysis.hpp"
#include "gibbs/app/svg.hpp"
#include "gibbs/calib/calibration.hpp"
#include "gibbs/core/errors.hpp"
#include "gibbs/models/dataset_io.hpp"
#include "gibbs/models/fredholm.hpp"
#include "gibbs/models/losses.hpp"
#include "gibbs/models/priors.hpp"
#include "gibbs/models/simulate.hpp"
#include "gibbs/oracle/verification.hpp"
#include "gibbs/predictive/predictive.hpp"
#include "gibbs/smc/checkpoint.hpp"
#include "gibbs/util/random.hpp"
#include "json.hpp"

namespace gibbs::app {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(fmt::format("cannot open {} for writing", path.string()));
  f << text;
  if (!f) throw IoError(fmt::format("failed writing {}", path.string()));
}

// Timestamps go here and nowhere else, so the payload files stay byte-identical.
class RunLog {
 public:
  explicit RunLog(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
    file_.open(dir / "run.log", std::ios::app);
    if (!file_) throw IoError(fmt::format("cannot open {}", (dir / "run.log").string()));
  }
  void operator()(const std::string& message) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%S", std::gmtime(&now));
    file_ << stamp << "Z " << message << '\n';
    file_.flush();
  }

 private:
  std::ofstream file_;
};

struct Prepared {
  fs::path dir;
  std::shared_ptr<Dataset> data;
  std::shared_ptr<const PriorModel> prior;
};

Prepared prepare(const RunConfig& config, RunLog& log, const std::string& command) {
  config.validate();
  Prepared p;
  p.dir = config.out;
  write_file(p.dir / "config.json", config.to_json());
  log(fmt::format("{} started (config {}, seed {})", command, config.name, config.seed));
  p.data = std::make_shared<Dataset>(materialize_dataset(config));
  p.prior = make_prior(config);
  return p;
}

smc::Problem problem_for(const RunConfig& config, const Prepared& p, const std::string& loss) {
  return smc::Problem{make_loss(config, loss, *p.data), p.prior, p.data};
}

fs::path checkpoint_dir(const fs::path& dir, const std::string& loss) { return dir / "checkpoints" / loss; }

void save(const smc::ParticleSystem& ps, const std::string& hash, const fs::path& path) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError(fmt::format("cannot create directory {}: {}", path.parent_path().string(), ec.message()));
  smc::save_checkpoint(ps, hash, path);
}

std::string trace_csv(const smc::FilterRun& run) {
  std::string out = "step,W,grid_index,ESS,resampled,acceptance_rate,proposals\n";
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    const auto& s = run.steps[k];
    out += fmt::format("{},{:.17g},{},{:.17g},{},{:.17g},{}\n", k, s.w,
                       s.grid_index == smc::kInsertedStep ? std::string("inserted") : std::to_string(s.grid_index),
                       s.ess, s.resampled ? 1 : 0, s.mutation.acceptance_rate(), s.mutation.proposals);
  }
  return out;
}

// Calibrates one loss and writes its report, trace and checkpoints.
calib::CalibrationResult calibrate_loss(const RunConfig& config, const Prepared& p, const std::string& loss_name,
                                        RunLog& log) {
  const auto problem = problem_for(config, p, loss_name);
  calib::CalibrationResult result;
  try {
    result = calib::calibrate(problem, config.filter_config(), config.rule);
  } catch (const DegeneracyError& e) {
    throw DegeneracyError(
        fmt::format("{}; try a finer W grid between {:g} and {:g} (bisect the step)", e.what(), e.from_w(), e.to_w()),
        e.step(), e.from_w(), e.to_w());
  }
  const std::string hash = p.data->content_hash();
  calib::write_report(result.report, p.dir / fmt::format("calibration_{}.csv", loss_name),
                      p.dir / fmt::format("calibration_{}.json", loss_name));
  write_file(p.dir / fmt::format("ess_trace_{}.csv", loss_name), trace_csv(result.run));
  const auto cdir = checkpoint_dir(p.dir, loss_name);
  for (std::size_t k = 0; k < result.run.systems.size(); ++k)
    save(result.run.systems[k], hash, cdir / fmt::format("step_{:02}.json", k));
  save(result.run.systems[result.report.selected], hash, cdir / "selected.json");
  log(fmt::format("calibrated loss {}: W* = {} ({} rule)", loss_name, result.report.selected_w,
                  calib::to_string(config.rule)));
  if (config.plots) {
    std::vector<double> ws, r, lo, hi;
    for (const auto& e : result.report.entries) {
      if (!(e.w > 0.0)) continue;
      ws.push_back(std::log2(e.w));
      r.push_back(e.r_cv);
      lo.push_back(e.r_cv - e.se);
      hi.push_back(e.r_cv + e.se);
    }
    write_file(p.dir / fmt::format("calibration_{}.svg", loss_name),
               svg_lines(fmt::format("LOOCV risk, loss {}", loss_name),
                         {{"R_CV", ws, r, "#1f77b4"}, {"R_CV - SE", ws, lo, "#7f7f7f", true},
                          {"R_CV + SE", ws, hi, "#7f7f7f", true}},
                         "log2 W", "R_CV"));
  }
  return result;
}

std::string table(const calib::CalibrationReport& report) {
  std::string out = fmt::format("{:>12} {:>14} {:>10} {:>8}\n", "W", "R_CV", "SE", "ESS");
  for (std::size_t k = 0; k < report.entries.size(); ++k) {
    const auto& e = report.entries[k];
    out += fmt::format("{:>12.6g} {:>14.6g} {:>10.4g} {:>8.3f}{}\n", e.w, e.r_cv, e.se, e.ess,
                       k == report.selected ? "  <- selected" : "");
  }
  return out;
}

}  // namespace

std::vector<std::string> verify_suites() {
  return {"stability", "w-continuity", "approximation", "consistency", "predictive", "inequalities", "oracle-equivalence"};
}

int cmd_simulate(const RunConfig& config, std::ostream& out) {
  if (config.dataset.source != "simulate") throw ConfigurationError("simulate needs dataset.source = 'simulate'");
  RunLog log(config.out);
  const auto p = prepare(config, log, "simulate");
  const auto csv = p.dir / "dataset.csv";
  models::save_dataset(*p.data, csv);
  log(fmt::format("wrote {}", csv.string()));
  std::string truth;
  for (double v : config.dataset.truth) truth += fmt::format("{}{:g}", truth.empty() ? "" : " ", v);
  auto noise = config.dataset.noise;
  noise.seed = config.noise_seed();
  if (config.dataset.zero_noise) noise.sigma = 0.0;
  out << fmt::format("simulated n={} d={} model={} noise={} truth=({}) -> {}\n", p.data->size(), p.data->dimension(),
                     config.model, config.dataset.observations.empty() ? noise.describe() : std::string("fixed"), truth,
                     csv.string());
  return kOk;
}

int cmd_calibrate(const RunConfig& config, std::ostream& out) {
  if (config.losses.size() != 1)
    throw ConfigurationError(fmt::format("calibrate takes a single loss, got {}", config.losses.size()));
  RunLog log(config.out);
  const auto p = prepare(config, log, "calibrate");
  models::save_dataset(*p.data, p.dir / "dataset.csv");
  const auto result = calibrate_loss(config, p, config.losses.front(), log);
  out << table(result.report);
  out << fmt::format("W* = {:.6g} (rule {}, loss {})\n", result.report.selected_w, calib::to_string(config.rule),
                     config.losses.front());
  return kOk;
}

int cmd_sample(const RunConfig& config, const std::optional<fs::path>& checkpoint, std::ostream& out) {
  RunLog log(config.out);
  const auto p = prepare(config, log, config.bayes ? "sample (bayes)" : "sample");
  const std::string loss_name = config.losses.front();
  const auto problem = problem_for(config, p, loss_name);
  const std::string hash = p.data->content_hash();

  smc::ParticleSystem start = [&] {
    if (config.bayes) {
      const auto grid = config.grid.build();
      if (grid.values().back() != 1.0) throw ConfigurationError("Bayes mode needs a W grid that ends at 1");
      const auto run = smc::run_calibration_filter(problem, config.filter_config());
      return run.systems.back();
    }
    const auto path = checkpoint.value_or(checkpoint_dir(p.dir, loss_name) / "selected.json");
    if (!fs::exists(path)) throw IoError(fmt::format("checkpoint {} not found; run calibrate first", path.string()));
    return smc::load_checkpoint(path, hash);
  }();
  const double w = start.w();
  smc::MutationStats stats;
  auto ps = smc::run_full_posterior_filter(std::move(start), problem, w, config.mh_steps, &stats);

  const std::string tag = config.bayes ? loss_name + "_bayes" : loss_name;
  const auto& names = *p.prior->names();
  const std::size_t dim = ps.parameter_dimension();
  std::vector<std::string> columns;
  for (std::size_t j = 0; j < dim; ++j) columns.push_back(j < names.size() ? names[j] : fmt::format("theta{}", j + 1));
  {
    std::string csv;
    for (const auto& c : columns) csv += c + ",";
    csv += "weight\n";
    const auto weights = ps.weights();
    for (std::size_t s = 0; s < ps.size(); ++s) {
      for (double v : ps.particle(s)) csv += fmt::format("{:.17g},", v);
      csv += fmt::format("{:.17g}\n", weights[s]);
    }
    write_file(p.dir / fmt::format("posterior_{}.csv", tag), csv);
  }
  const auto summary = summarize(ps, columns);
  write_file(p.dir / fmt::format("summary_{}.csv", tag), summary_csv(summary));
  save(ps, hash, checkpoint_dir(p.dir, loss_name) / fmt::format("posterior_{}.json", tag));

  std::optional<CredibleBand> band;
  if (config.model == "toy-fredholm") {
    band = credible_band(ps, config.dataset.blocks);
    write_file(p.dir / fmt::format("band_{}.csv", tag), band->to_csv());
  }
  if (config.plots) {
    auto rng = util::stream_rng(config.seed, 0xb0a7, 0);
    std::vector<double> prior_draws(20000 * dim);
    for (std::size_t s = 0; s < 20000; ++s)
      p.prior->sample_into(rng, std::span<double>(prior_draws).subspan(s * dim, dim));
    write_file(p.dir / fmt::format("marginals_{}.svg", tag),
               svg_marginals(columns, ps.particle_values(), dim, ps.weights(), prior_draws));
    write_file(p.dir / fmt::format("pairs_{}.svg", tag), svg_pairs(columns, ps.particle_values(), dim));
    if (band) {
      write_file(p.dir / fmt::format("band_{}.svg", tag),
                 svg_lines(fmt::format("u(t), 90% band at W = {:g}", w),
                           {{"mean", band->t, band->mean, "#1f77b4"},
                            {"5%", band->t, band->lower, "#1f77b4", true},
                            {"95%", band->t, band->upper, "#1f77b4", true}},
                           "t", "u(t)"));
    }
  }
  log(fmt::format("sampled loss {} at W = {} (acceptance {:.3f})", loss_name, w, stats.acceptance_rate()));
  out << fmt::format("posterior at W = {:.6g} (loss {}, {} particles, acceptance {:.3f})\n", w, loss_name, ps.size(),
                     stats.acceptance_rate());
  out << fmt::format("{:>16} {:>12} {:>12} {:>12} {:>12}\n", "component", "mean", "sd", "q05", "q95");
  for (const auto& r : summary)
    out << fmt::format("{:>16} {:>12.5g} {:>12.5g} {:>12.5g} {:>12.5g}\n", r.name, r.mean, r.sd, r.q05, r.q95);
  if (band) out << fmt::format("average 90% band width of u(t): {:.6g}\n", band->average_width());
  return kOk;
}

int cmd_select(const RunConfig& config, std::ostream& out) {
  if (config.losses.size() < 2) throw ConfigurationError("select needs at least two losses");
  RunLog log(config.out);
  const auto p = prepare(config, log, "select");
  models::save_dataset(*p.data, p.dir / "dataset.csv");
  const std::string hash = p.data->content_hash();
  std::vector<predictive::Candidate> candidates;
  std::map<std::string, int> seen;
  for (const auto& loss_name : config.losses) {
    const int copy = seen[loss_name]++;
    const std::string label = copy == 0 ? loss_name : fmt::format("{}#{}", loss_name, copy + 1);
    const auto selected = checkpoint_dir(p.dir, loss_name) / "selected.json";
    if (copy == 0 && fs::exists(selected)) {
      auto ps = smc::load_checkpoint(selected, hash);
      const double w = ps.w();
      candidates.push_back({label, make_loss(config, loss_name, *p.data), w, std::move(ps), hash});
      log(fmt::format("reused calibration for {} (W = {})", loss_name, w));
    } else if (copy > 0) {
      auto twin = candidates[static_cast<std::size_t>(
          std::find_if(candidates.begin(), candidates.end(), [&](const auto& c) { return c.name == loss_name; }) -
          candidates.begin())];
      twin.name = label;
      candidates.push_back(std::move(twin));
    } else {
      const auto result = calibrate_loss(config, p, loss_name, log);
      candidates.push_back({label, make_loss(config, loss_name, *p.data), result.report.selected_w,
                            result.run.systems[result.report.selected], hash});
    }
  }
  const auto report = predictive::compare_models(candidates, *p.data);
  write_file(p.dir / "selection.json", report.to_json());
  write_file(p.dir / "selection.txt", report.to_table());
  std::string csv = "loss,W,P_CV,SE\n";
  for (const auto& e : report.ranking) csv += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", e.name, e.w, e.p_cv, e.se);
  write_file(p.dir / "selection.csv", csv);
  out << report.to_table();
  for (const auto& [a, b] : report.ties)
    out << fmt::format("tie: {} and {}\n", report.ranking[a].name, report.ranking[b].name);
  out << fmt::format("preferred loss: {}\n", report.ranking.front().name);
  log(fmt::format("selected loss {}", report.ranking.front().name));
  return kOk;
}

int cmd_verify(const RunConfig& config, const std::string& suite, std::ostream& out) {
  const auto suites = verify_suites();
  if (std::find(suites.begin(), suites.end(), suite) == suites.end())
    throw ConfigurationError(fmt::format("unknown suite '{}'", suite));
  RunLog log(config.out);
  write_file(fs::path(config.out) / "config.json", config.to_json());
  log(fmt::format("verify {} started (seed {})", suite, config.seed));

  oracle::VerificationReport report;
  std::string extra_csv;
  const auto conjugate = preset("conjugate");
  const auto conj_data = std::make_shared<Dataset>(materialize_dataset(conjugate));
  const auto conj_loss = make_loss(conjugate, "squared-l2", *conj_data);
  const auto conj_prior = make_prior(conjugate);
  if (suite == "stability") {
    report = oracle::verify_stability(*conj_loss, *conj_prior, *conj_data, 0.5, {0.2, 0.1, 0.05, 0.025, 0.0});
  } else if (suite == "w-continuity") {
    report = oracle::verify_w_continuity(*conj_loss, *conj_prior, *conj_data, 0.5);
  } else if (suite == "approximation") {
    // one-block toy problem so the parameter is scalar
    const auto grid = models::unit_grid(20);
    const models::SmoothingKernelOperator fine(grid, 800);
    const auto data = models::simulate_toy_dataset(
        ParameterVector{4.0}, models::NoiseSpec{models::NoiseKind::AdditiveGaussian, 0.2, 0.2, config.seed}, 10, fine, 1);
    auto factory = [&](std::size_t m) -> std::shared_ptr<const LossModel> {
      return std::make_shared<models::SquaredL2Loss>(
          std::make_shared<models::FredholmForwardModel>(models::SmoothingKernelOperator(grid, m), 1), 1.0 / (2 * 0.04));
    };
    report = oracle::verify_finite_approximation(factory, *models::fredholm_prior(1), data, 0.25);
  } else if (suite == "consistency" || suite == "predictive") {
    oracle::LocationProblem problem;
    problem.seed = config.seed;
    report = suite == "consistency" ? oracle::verify_consistency(problem) : oracle::verify_predictive_convergence(problem);
  } else if (suite == "inequalities") {
    report = oracle::verify_inequalities(config.seed, 100);
  } else {
    auto filter = conjugate.filter_config();
    filter.seed = config.seed;
    filter.particles = config.particles;
    filter.mh_steps = config.mh_steps;
    const smc::Problem problem{conj_loss, conj_prior, conj_data};
    auto result = oracle_equivalence(problem, filter, 20);
    report = std::move(result.report);
    extra_csv = result.to_csv();
  }
  const fs::path dir = config.out;
  write_file(dir / fmt::format("verify_{}.csv", suite), extra_csv.empty() ? report.to_csv() : extra_csv);
  write_file(dir / fmt::format("verify_{}.json", suite), report.to_json());
  std::size_t failed = 0;
  for (const auto& c : report.checks) {
    out << fmt::format("{} {}{}\n", c.passed ? "ok  " : "FAIL", c.name, c.detail.empty() ? "" : " (" + c.detail + ")");
    if (!c.passed) ++failed;
  }
  out << fmt::format("suite {}: {} of {} checks passed\n", suite, report.checks.size() - failed, report.checks.size());
  log(fmt::format("verify {} finished: {} failed", suite, failed));
  return failed == 0 ? kOk : kVerificationFailed;
}

int exit_code_for_current_exception(std::ostream& err) {
  try {
    throw;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  } catch (const ProvenanceError& e) {
    err << "provenance error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const UnsupportedLossError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kConfigurationError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailed;
  }
}

}  // namespace gibbs::app
