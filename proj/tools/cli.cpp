#include "cli.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pcsid/control.hpp"
#include "pcsid/errors.hpp"
#include "pcsid/experiment.hpp"
#include "pcsid/fusion.hpp"
#include "pcsid/io.hpp"
#include "pcsid/metrics.hpp"
#include "pcsid/plot.hpp"
#include "pcsid/regression.hpp"

namespace pcsid::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string verb;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool exact_derivatives = false;
  int case_id = 0;
};

ExperimentConfig resolve_config(const Options& o) {
  ExperimentConfig c;
  if (!o.config_path.empty()) {
    c = config_from_json(read_text(o.config_path));
    if (o.case_id != 0) c.case_id = o.case_id;
  } else {
    c = default_config(o.case_id != 0 ? o.case_id : 1);
  }
  if (o.seed_given) c.seed = o.seed;
  if (o.exact_derivatives) c.pipeline.exact_derivatives = true;
  if (!o.out_dir.empty()) c.output_dir = o.out_dir;
  if (c.output_dir.empty()) c.output_dir = "out";
  c.validate();
  return c;
}

// Dataset in the output directory, generated and written when absent.
ExperimentData load_or_simulate(const ExperimentConfig& config, std::ostream& out) {
  const fs::path dir(config.output_dir);
  if (fs::exists(dir / "manifest.json")) {
    StoredExperiment stored = read_experiment(dir);
    if (stored.config.case_id != config.case_id || stored.config.seed != config.seed) {
      throw ConfigError("dataset in " + dir.string() + " was generated for case " +
                        std::to_string(stored.config.case_id) + ", seed " + std::to_string(stored.config.seed));
    }
    out << "dataset: " << dir.string() << "\n";
    return std::move(stored.data);
  }
  out << "dataset: generating case " << config.case_id << "\n";
  ExperimentData data = generate_datasets(config);
  write_experiment(dir, config, data);
  return data;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string join_mm(const std::vector<double>& lengths) {
  std::ostringstream ss;
  ss << "[";
  for (std::size_t i = 0; i < lengths.size(); ++i) ss << (i ? ", " : "") << std::setprecision(4) << lengths[i] * 1e3;
  ss << "] mm";
  return ss.str();
}

void write_profiles_svg(const fs::path& path, const FusionResult& f) {
  LineChart chart{"Strain distance profiles", "s [mm]", "normalized distance", {}};
  for (const DistanceProfile& p : f.profiles) {
    if (p.distances.size() == 0) continue;
    chart.series.push_back({"iteration " + std::to_string(p.iteration), to_vector(p.boundaries) * 1e3, p.distances,
                            false, true});
  }
  write_text_atomic(path, render_svg(chart));
}

void write_pareto_outputs(const fs::path& dir, const ParetoSweep& sweep) {
  write_text_atomic(dir / "pareto.csv", pareto_to_csv(sweep.points));
  write_text_atomic(dir / "pareto_front.csv", pareto_to_csv(sweep.front));
  LineChart chart{"Pareto front", "number of segments", "mean body position error [mm]", {}};
  chart.log_y = true;
  Eigen::VectorXd x(static_cast<Eigen::Index>(sweep.front.size())), y(x.size());
  for (std::size_t i = 0; i < sweep.front.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = sweep.front[i].num_segments;
    y[static_cast<Eigen::Index>(i)] = sweep.front[i].e_p_body * 1e3;
  }
  chart.series.push_back({"front", x, y, false, true});
  write_text_atomic(dir / "pareto.svg", render_svg(chart));
}

MarkerData fusion_markers(const ExperimentConfig& config, const ExperimentData& data) {
  if (data.pac) return pac_markers(*data.pac);
  const std::vector<TrajectoryDataset> sets =
      config.noise.apply_to_fusion ? noisy_training_set(config, data.train) : data.train;
  return stacked_markers(sets);
}

int cmd_simulate(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = generate_datasets(config);
  write_experiment(config.output_dir, config, data);
  if (data.pac) {
    out << "wrote " << data.pac->markers.rows() << " static configurations to " << config.output_dir << "\n";
  } else {
    out << "wrote " << data.train.size() << " training trajectories and 1 test trajectory to " << config.output_dir
        << "\n";
  }
  return kExitOk;
}

int cmd_fuse(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = load_or_simulate(config, out);
  const MarkerData markers = fusion_markers(config, data);
  const fs::path dir(config.output_dir);
  const FusionResult f = kinematic_fusion(markers, config.fusion);
  write_text_atomic(dir / "fusion.json", fusion_to_json(f));
  write_profiles_svg(dir / "fusion_profiles.svg", f);
  out << "segments: " << f.num_segments() << " lengths " << join_mm(f.segment_lengths) << " after " << f.iterations
      << " iterations\n";
  if (!config.h_sweep.empty()) {
    const ParetoSweep sweep = pareto_sweep(markers, config.h_sweep, nullptr, config.fusion.max_iterations);
    write_pareto_outputs(dir, sweep);
    out << "sweep: " << sweep.points.size() << " thresholds, " << sweep.front.size() << " front points\n";
  }
  return kExitOk;
}

int cmd_pareto(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = load_or_simulate(config, out);
  ParetoSweep sweep;
  if (data.pac) {
    sweep = run_pareto(config, *data.pac);
  } else {
    const MarkerData markers = fusion_markers(config, data);
    const std::vector<double> h =
        config.h_sweep.empty() ? adaptive_thresholds(markers, log_thresholds(1e-3, 1.0, 60)) : config.h_sweep;
    sweep = pareto_sweep(markers, h, nullptr, config.fusion.max_iterations);
  }
  write_pareto_outputs(config.output_dir, sweep);
  for (const ParetoPoint& p : sweep.front) {
    out << "n_s " << p.num_segments << ": e_p_body " << std::setprecision(4) << p.e_p_body * 1e3 << " mm, e_theta_body "
        << p.e_theta_body << " rad, h " << p.h << ", lengths " << join_mm(p.segment_lengths) << "\n";
  }
  return kExitOk;
}

IdentifiedModel identify_and_write(const ExperimentConfig& config, const ExperimentData& data, std::ostream& out) {
  if (data.pac) throw ConfigError("case " + std::to_string(config.case_id) + " has no dynamic trajectories");
  const PipelineResult r = run_pipeline(config, data.train);
  const fs::path dir(config.output_dir);
  write_text_atomic(dir / "fusion.json", fusion_to_json(r.fusion));
  write_text_atomic(dir / "model.json", identified_model_to_json(r.model));
  out << "segments: " << r.geometry.num_segments() << " lengths " << join_mm(r.geometry.segment_lengths()) << "\n";
  for (const IterationRecord& h : r.model.history) {
    out << "iteration " << h.iteration << ": active " << h.mask.num_active() << ", relative residual "
        << std::setprecision(4) << h.relative_residual << ", removed [";
    for (std::size_t i = 0; i < h.removed.size(); ++i) out << (i ? ", " : "") << h.removed[i];
    out << "]\n";
  }
  out << "mask:";
  for (int e = 0; e < r.model.mask().size(); ++e) out << " " << (r.model.mask().is_active(e) ? 1 : 0);
  out << "\n";
  return r.model;
}

IdentifiedModel load_or_identify(const ExperimentConfig& config, const ExperimentData& data, std::ostream& out) {
  const fs::path path = fs::path(config.output_dir) / "model.json";
  if (fs::exists(path)) {
    out << "model: " << path.string() << "\n";
    return identified_model_from_json(read_text(path));
  }
  return identify_and_write(config, data, out);
}

int cmd_identify(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = load_or_simulate(config, out);
  identify_and_write(config, data, out);
  return kExitOk;
}

int cmd_evaluate(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = load_or_simulate(config, out);
  if (data.pac) throw ConfigError("case " + std::to_string(config.case_id) + " has no test trajectory");
  const IdentifiedModel model = load_or_identify(config, data, out);
  const ShapeErrorReport rep = evaluate_model(model, data.test, config.dataset.max_internal_step);
  const fs::path dir(config.output_dir);
  write_text_atomic(dir / "evaluation.json", report_to_json(rep));
  write_text_atomic(dir / "evaluation.csv", report_to_csv(rep));
  const Eigen::Index T = std::min(rep.times.size(), rep.predicted_markers.rows());
  if (T > 0) {
    const Eigen::VectorXd t = rep.times.head(T);
    const Eigen::Index ee = data.test.markers.cols() - 3;
    LineChart tip{"End-effector position", "t [s]", "position [mm]", {}};
    tip.series.push_back({"x measured", t, data.test.markers.col(ee).head(T) * 1e3, false, false});
    tip.series.push_back({"x model", t, rep.predicted_markers.col(ee).head(T) * 1e3, true, false});
    tip.series.push_back({"y measured", t, data.test.markers.col(ee + 1).head(T) * 1e3, false, false});
    tip.series.push_back({"y model", t, rep.predicted_markers.col(ee + 1).head(T) * 1e3, true, false});
    write_text_atomic(dir / "evaluation_tip.svg", render_svg(tip));
    if (rep.series.body_position.size() >= T && rep.series.ee_position.size() >= T) {
      LineChart err{"Shape error", "t [s]", "position error [mm]", {}};
      err.series.push_back({"body mean", t, rep.series.body_position.head(T) * 1e3, false, false});
      err.series.push_back({"end-effector", t, rep.series.ee_position.head(T) * 1e3, false, false});
      write_text_atomic(dir / "evaluation_error.svg", render_svg(err));
    }
  }
  out << std::setprecision(4) << "e_p_body " << rep.e_p_body * 1e3 << " mm, e_theta_body " << rep.e_theta_body
      << " rad, e_p_ee " << rep.e_p_ee * 1e3 << " mm, e_theta_ee " << rep.e_theta_ee << " rad\n";
  if (rep.diverged) {
    out << "rollout diverged at t = " << rep.divergence_time << " s\n";
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_control(const ExperimentConfig& config, std::ostream& out) {
  const ExperimentData data = load_or_simulate(config, out);
  if (data.pac) throw ConfigError("case " + std::to_string(config.case_id) + " has no dynamic model");
  const IdentifiedModel model = load_or_identify(config, data, out);
  const ControlDemo demo = run_control_demo(config, model);
  const ClosedLoopResult& r = demo.result;
  const fs::path dir(config.output_dir);
  write_text_atomic(dir / "control.json", closed_loop_to_json(r, demo.setpoints));
  write_text_atomic(dir / "control.csv", closed_loop_to_csv(r));
  const int n = static_cast<int>(r.q.cols());
  LineChart bend{"Bending strains", "t [s]", "curvature [1/m]", {}};
  LineChart lin{"Linear strains", "t [s]", "strain [-]", {}};
  const char* names[] = {"bending", "shear", "axial"};
  for (int e = 0; e < n; ++e) {
    LineChart& c = e % 3 == 0 ? bend : lin;
    const std::string label = std::string(names[e % 3]) + " " + std::to_string(e / 3 + 1);
    c.series.push_back({label, r.times, r.q.col(e), false, false});
    c.series.push_back({label + " ref", r.times, r.q_ref.col(e), true, false});
  }
  write_text_atomic(dir / "control_bending.svg", render_svg(bend));
  write_text_atomic(dir / "control_linear.svg", render_svg(lin));
  out << "setpoint range:";
  for (int e = 0; e < n; ++e) out << " " << std::setprecision(4) << demo.setpoint_range[e];
  out << "\n";
  for (Eigen::Index k = 0; k < r.steady_state_error.rows(); ++k) {
    out << "setpoint " << k + 1 << " steady-state error [%]:";
    for (int e = 0; e < n; ++e) {
      const double range = demo.setpoint_range[e];
      out << " " << (range > 0.0 ? 100.0 * r.steady_state_error(k, e) / range : 0.0);
    }
    out << "\n";
  }
  if (r.diverged) {
    out << "closed loop diverged at t = " << r.divergence_time << " s: " << r.failure << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identification of piecewise constant strain models for planar soft robots", "pcsid"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "Output directory");
    sub->add_option("--seed", o.seed, "Random seed")->each([&o](const std::string&) { o.seed_given = true; });
    sub->add_flag("--exact-derivatives", o.exact_derivatives,
                  "Regress on simulator states instead of filtered marker data");
    sub->add_option("--case", o.case_id, "Evaluation case")->check(CLI::Range(1, 6));
  };
  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"simulate", "Generate training and test datasets"},
      {"fuse", "Kinematic fusion of the training markers"},
      {"identify", "Fusion, differentiation and dynamic identification"},
      {"evaluate", "Roll out the identified model on the test trajectory"},
      {"control", "Closed-loop setpoint regulation with the identified model"},
      {"pareto", "Fusion threshold sweep and Pareto front"}};
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub);
    sub->callback([&o, name = name] { o.verb = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    const ExperimentConfig config = resolve_config(o);
    if (o.verb == "simulate") return cmd_simulate(config, out);
    if (o.verb == "fuse") return cmd_fuse(config, out);
    if (o.verb == "identify") return cmd_identify(config, out);
    if (o.verb == "evaluate") return cmd_evaluate(config, out);
    if (o.verb == "control") return cmd_control(config, out);
    if (o.verb == "pareto") return cmd_pareto(config, out);
    err << "error: unknown command\n";
    return kExitConfig;
  } catch (const InvalidArgumentError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
}

}  // namespace pcsid::cli
