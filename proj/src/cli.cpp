#include "taskframe/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"
#include "taskframe/control.hpp"
#include "taskframe/error.hpp"
#include "taskframe/hashing.hpp"
#include "taskframe/log.hpp"
#include "taskframe/task_model.hpp"
#include "taskframe/trial_io.hpp"

namespace taskframe {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::string out = ".";
  int64_t seed = 0;
  bool seed_given = false;
  bool verbose = false;
};

class Context {
 public:
  Context(const Globals& g, std::ostream& out, std::ostream& err) : g_(g), out_(out), err_(err) {}

  const Globals& g() const { return g_; }
  std::ostream& out() { return out_; }
  void Info(const std::string& msg) {
    if (g_.verbose) err_ << msg << "\n";
  }
  fs::path OutDir() {
    fs::path dir(g_.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) ThrowInvalid("cannot create output directory '" + g_.out + "': " + ec.message());
    return dir;
  }

 private:
  const Globals& g_;
  std::ostream& out_;
  std::ostream& err_;
};

Json InputRecord(const std::string& path) {
  return {{"path", path}, {"sha256", Sha256File(path)}};
}

std::string Fmt(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

std::string RatioText(const Json& r) {
  const double v = NumberFromJson(r.at("value"), "ratio");
  std::string s = std::isinf(v) ? std::string("inf") : Fmt("%.4g", v);
  if (r.contains("both_degenerate") && r.at("both_degenerate").get<bool>()) s += " (both degenerate)";
  return s;
}

std::string VecText(const Json& v) {
  std::string s = "(";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += Fmt("%.4f", NumberFromJson(v[i], "vector"));
  }
  return s + ")";
}

int CmdSynth(Context& ctx, const std::string& positional, int trials_override) {
  const std::string path = !positional.empty() ? positional : ctx.g().config;
  if (path.empty()) ThrowInvalid("synth: no scenario spec given (positional or --config)");
  const Json raw = ReadJsonFile(path);
  ScenarioSpec spec = ScenarioSpec::FromJson(raw);
  if (ctx.g().seed_given) {
    if (ctx.g().seed < 0) ThrowInvalid("--seed must be >= 0");
    spec.seed = static_cast<uint64_t>(ctx.g().seed);
  }
  if (trials_override > 0) spec.trials = trials_override;
  spec.Validate();

  const SyntheticBundle bundle = Generate(spec);
  const fs::path dir = ctx.OutDir();
  const std::string spec_hash = Sha256File(path);
  Json files = Json::array();
  for (const auto& t : bundle.trials) {
    const fs::path file = dir / (t.name + ".csv");
    WriteTrialCsvFile(file.string(), t,
                      "synthetic trial, scenario sha256 " + spec_hash + " seed " +
                          std::to_string(spec.seed));
    files.push_back({{"path", file.filename().string()}, {"sha256", Sha256File(file.string())}});
    ctx.Info("wrote " + file.string());
  }
  Json truth = bundle.truth.ToJson();
  truth["provenance"] = {{"inputs", Json::array({InputRecord(path)})},
                         {"config", spec.ToJson()},
                         {"outputs", files}};
  WriteJsonFile((dir / "truth.json").string(), truth);
  ctx.out() << "synth: " << bundle.trials.size() << " trials, " << bundle.trials[0].times.size()
            << " samples each -> " << dir.string() << "\n";
  return kExitOk;
}

int CmdDerive(Context& ctx, const std::vector<std::string>& trial_paths,
              const std::string& truth_path) {
  if (trial_paths.empty()) ThrowInvalid("derive: at least one trial file required");
  DeriveConfig cfg;
  Json inputs = Json::array();
  if (!ctx.g().config.empty()) {
    cfg = DeriveConfig::FromJson(ReadJsonFile(ctx.g().config));
    inputs.push_back(InputRecord(ctx.g().config));
  }
  std::vector<DemoTrial> demos;
  for (const auto& p : trial_paths) {
    demos.push_back(ReadTrialCsvFile(p));
    inputs.push_back(InputRecord(p));
    ctx.Info("read " + p + ": " + std::to_string(demos.back().times.size()) + " samples");
  }
  DeriveResult r = RunDerive(demos, cfg);
  const Json provenance = {{"inputs", inputs}, {"config", cfg.ToJson()}};
  r.model.provenance = provenance;

  const fs::path dir = ctx.OutDir();
  WriteJsonFile((dir / "task_model.json").string(), r.model.ToJson());
  Json report = TaskFrameReport(r.frame);
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) {
    const Json tj = ReadJsonFile(truth_path);
    Json tcopy = tj;
    tcopy.erase("provenance");
    truth = GroundTruth::FromJson(tcopy);
    report["ground_truth"] = tcopy;
    report["provenance"] = provenance;
    report["provenance"]["inputs"].push_back(InputRecord(truth_path));
  } else {
    report["provenance"] = provenance;
  }
  WriteJsonFile((dir / "report.json").string(), report);
  ctx.out() << RenderReport(report, truth);
  return kExitOk;
}

int CmdSimulate(Context& ctx, const std::string& model_path, const std::string& positional) {
  const std::string scen_path = !positional.empty() ? positional : ctx.g().config;
  if (scen_path.empty()) ThrowInvalid("simulate: no scenario given (positional or --config)");
  const TaskModel model = TaskModel::FromJson(ReadJsonFile(model_path));
  const SimScenario sc = SimScenario::FromJson(ReadJsonFile(scen_path));
  const SimLog log = RunSimulation(model, sc);

  const fs::path dir = ctx.OutDir();
  {
    std::ofstream f(dir / "simlog.csv");
    if (!f) ThrowInvalid("cannot write simlog.csv");
    WriteSimLogCsv(f, log);
  }
  Json summary = {{"rmse", log.rmse.ToJson()},
                  {"completed", log.completed},
                  {"final_xi_bar", log.final_xi_bar},
                  {"steps", log.rows.size()},
                  {"duration_s", log.rows.back().t}};
  if (!sc.overrides.IsNominal()) {
    SimScenario base = sc;
    base.overrides = SimOverrides{};
    const SimLog nominal = RunSimulation(model, base);
    const Json a = log.rmse.ToJson(), b = nominal.rmse.ToJson();
    Json ratios = Json::object(), degraded = Json::array();
    for (auto it = a.begin(); it != a.end(); ++it) {
      const double num = it.value().get<double>(), den = b.at(it.key()).get<double>();
      const double ratio = den > 0 ? num / den : (num > 0 ? INFINITY : 1.0);
      ratios[it.key()] = NumberToJson(ratio);
      if (ratio > 1.25) degraded.push_back(it.key());
    }
    summary["versus_nominal"] = {
        {"nominal_rmse", b}, {"ratio", ratios}, {"degraded", degraded}};
  }
  summary["provenance"] = {{"inputs", Json::array({InputRecord(model_path), InputRecord(scen_path)})},
                           {"config", sc.ToJson()}};
  WriteJsonFile((dir / "summary.json").string(), summary);

  const Rmse& m = log.rmse;
  ctx.out() << "simulate: " << (log.completed ? "completed" : "stopped at t_max") << ", "
            << log.rows.size() << " steps, xi_bar " << Fmt("%.4f", log.final_xi_bar) << "\n"
            << "  RMSE  dR " << Fmt("%.3f", m.rotation_deg) << " deg  dp "
            << Fmt("%.3f", m.position_mm) << " mm  dw " << Fmt("%.3f", m.omega_deg_s)
            << " deg/s  dv " << Fmt("%.3f", m.v_mm_s) << " mm/s  df " << Fmt("%.3f", m.force_n)
            << " N  dm " << Fmt("%.4f", m.moment_nm) << " Nm\n";
  if (summary.contains("versus_nominal") && !summary["versus_nominal"]["degraded"].empty())
    ctx.out() << "  degraded versus nominal: " << summary["versus_nominal"]["degraded"].dump()
              << "\n";
  return kExitOk;
}

// Splits the simulation log into per-signal (xi_bar, desired, actual) tables.
void WritePlotData(const std::string& simlog_path, const fs::path& dir) {
  std::ifstream in(simlog_path);
  if (!in) ThrowInvalid("cannot open '" + simlog_path + "'");
  std::string line;
  if (!std::getline(in, line)) ThrowInvalid(simlog_path + ": empty file");
  std::map<std::string, size_t> col;
  {
    std::stringstream ss(line);
    std::string name;
    for (size_t k = 0; std::getline(ss, name, ','); ++k) col[name] = k;
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != col.size()) ThrowInvalid(simlog_path + ": ragged row");
    rows.push_back(std::move(cells));
  }
  const std::map<std::string, std::vector<std::string>> groups = {
      {"position", {"px", "py", "pz"}},
      {"orientation", {"qw", "qx", "qy", "qz"}},
      {"twist", {"wx", "wy", "wz", "vx", "vy", "vz"}},
      {"wrench", {"fx", "fy", "fz", "mx", "my", "mz"}}};
  for (const auto& [group, names] : groups) {
    std::vector<std::string> header = {"xi_bar"};
    for (const auto& n : names) header.push_back(n + "_d");
    for (const auto& n : names) header.push_back(n);
    std::vector<size_t> idx;
    for (const auto& h : header) {
      if (!col.count(h)) ThrowInvalid(simlog_path + ": missing column '" + h + "'");
      idx.push_back(col.at(h));
    }
    std::ofstream out(dir / ("plot_" + group + ".csv"));
    for (size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
    out << "\n";
    for (const auto& r : rows) {
      for (size_t k = 0; k < idx.size(); ++k) out << (k ? "," : "") << r[idx[k]];
      out << "\n";
    }
  }
}

int CmdReport(Context& ctx, const std::string& report_path, const std::string& truth_path,
              const std::string& simlog_path) {
  const Json report = ReadJsonFile(report_path);
  std::optional<GroundTruth> truth;
  if (!truth_path.empty()) {
    Json tj = ReadJsonFile(truth_path);
    tj.erase("provenance");
    truth = GroundTruth::FromJson(tj);
  } else if (report.contains("ground_truth")) {
    truth = GroundTruth::FromJson(report.at("ground_truth"));
  }
  ctx.out() << RenderReport(report, truth);
  if (!simlog_path.empty()) {
    const fs::path dir = ctx.OutDir();
    WritePlotData(simlog_path, dir);
    ctx.out() << "plot data written to " << dir.string() << "\n";
  }
  return kExitOk;
}

Vec3 MeanAnchor(const GroundTruth& t, FrameTag view, bool motion) {
  Vec3 acc = Vec3::Zero();
  for (const auto& tr : t.trials) {
    if (motion)
      acc += view == FrameTag::kTool ? tr.motion_anchor_tool : tr.motion_anchor_world;
    else
      acc += view == FrameTag::kTool ? tr.wrench_anchor_tool : tr.wrench_anchor_world;
  }
  return acc / static_cast<double>(t.trials.size());
}

Vec3 MeanAxis(const GroundTruth& t, FrameTag view, bool motion) {
  Vec3 acc = Vec3::Zero();
  for (const auto& tr : t.trials) {
    if (motion)
      acc += view == FrameTag::kTool ? tr.motion_axis_tool : tr.motion_axis_world;
    else
      acc += view == FrameTag::kTool ? tr.wrench_axis_tool : tr.wrench_axis_world;
  }
  return acc.normalized();
}

}  // namespace

FrameComparison CompareFrame(const TaskFrame& frame, const GroundTruth& truth, bool motion) {
  if (truth.trials.empty()) ThrowInvalid("ground truth has no trials");
  const Vec3 anchor = MeanAnchor(truth, frame.origin.viewpoint, motion);
  const Vec3 axis = MeanAxis(truth, frame.orientation.viewpoint, motion);
  FrameComparison c;
  c.origin_distance = (frame.origin.origin - anchor).norm();
  int best = 0;
  (frame.orientation.rotation.transpose() * axis).cwiseAbs().maxCoeff(&best);
  const Vec3 derived_axis = frame.orientation.rotation.col(best);
  c.axis_angle = std::acos(std::min(1.0, std::abs(derived_axis.dot(axis))));
  // Lines compared in the origin viewpoint; meaningful when both viewpoints agree.
  const Vec3 n = derived_axis.cross(axis);
  const Vec3 d = anchor - frame.origin.origin;
  c.common_normal = n.norm() > 1e-9 ? std::abs(d.dot(n)) / n.norm()
                                    : (d - d.dot(axis) * axis).norm();
  return c;
}

std::string RenderReport(const Json& report, const std::optional<GroundTruth>& truth) {
  if (!report.is_object()) ThrowInvalid("report: expected an object");
  for (const char* key : {"task_frame", "origin_candidates", "orientation_candidates"})
    if (!report.contains(key)) ThrowInvalid(std::string("report: missing section '") + key + "'");
  const TaskFrame frame = TaskFrameFromJson(report.at("task_frame"));
  const Json& tf = report.at("task_frame");
  std::ostringstream o;
  char buf[256];

  o << "Origin candidates\n";
  std::snprintf(buf, sizeof buf, "  %-6s %-7s %-7s %-34s %-12s %s\n", "view", "screw", "model",
                "point [m]", "det [m^6]", "sigma^2");
  o << buf;
  for (const auto& c : report.at("origin_candidates")) {
    const Json& a = c.at("asip");
    std::snprintf(buf, sizeof buf, "  %-6s %-7s %-7s %-34s %-12.4g %.4g\n",
                  c.at("viewpoint").get<std::string>().c_str(),
                  c.at("screw").get<std::string>().c_str(),
                  c.at("model").get<std::string>().c_str(), VecText(a.at("point_m")).c_str(),
                  NumberFromJson(c.at("det_m6"), "det"),
                  NumberFromJson(a.at("sigma_hat_sq"), "sigma"));
    o << buf;
  }
  if (report.contains("fused_origins")) {
    o << "Fused origins\n";
    for (const auto& f : report.at("fused_origins")) {
      std::snprintf(buf, sizeof buf, "  %-6s %-34s det %-12.4g motion %s (ratio %s) wrench %s (ratio %s)\n",
                    f.at("viewpoint").get<std::string>().c_str(), VecText(f.at("point_m")).c_str(),
                    NumberFromJson(f.at("det_m6"), "det"),
                    f.at("motion_model").get<std::string>().c_str(),
                    RatioText(f.at("motion_ratio")).c_str(),
                    f.at("wrench_model").get<std::string>().c_str(),
                    RatioText(f.at("wrench_ratio")).c_str());
      o << buf;
    }
  }
  o << "Orientation candidates\n";
  for (const auto& c : report.at("orientation_candidates")) {
    const Json& fr = c.at("frame");
    const Json first = Json::array({fr[0], fr[3], fr[6]});
    std::snprintf(buf, sizeof buf, "  %-6s %-6s main axis %-30s det %.4g\n",
                  c.at("viewpoint").get<std::string>().c_str(),
                  c.at("vector").get<std::string>().c_str(), VecText(first).c_str(),
                  NumberFromJson(c.at("det"), "det"));
    o << buf;
  }
  if (report.contains("averaged_orientations")) {
    o << "Averaged orientations\n";
    for (const auto& a : report.at("averaged_orientations")) {
      std::snprintf(buf, sizeof buf, "  %-6s det %-12.4g iterations %d\n",
                    a.at("viewpoint").get<std::string>().c_str(),
                    NumberFromJson(a.at("det"), "det"), a.at("iterations").get<int>());
      o << buf;
    }
  }
  const Json& ratios = tf.at("ratios");
  o << "Task frame\n"
    << "  origin      " << ToString(frame.origin.viewpoint) << " " << VecText(tf.at("origin_m"))
    << " m  (viewpoint ratio " << RatioText(ratios.at("origin_viewpoint")) << ")\n"
    << "  models      motion " << ToString(frame.origin.motion_model) << " (ratio "
    << RatioText(ratios.at("motion_model")) << "), wrench "
    << ToString(frame.origin.wrench_model) << " (ratio " << RatioText(ratios.at("wrench_model"))
    << ")\n"
    << "  orientation " << ToString(frame.orientation.viewpoint) << " (ratio "
    << RatioText(ratios.at("orientation_viewpoint")) << ")"
    << (frame.orientation.weighting_applied ? ", weighted" : "") << "\n"
    << "  vectors     " << ToString(frame.orientation.motion_vector) << ", "
    << ToString(frame.orientation.wrench_vector) << "; progress " << ToString(frame.progress)
    << "\n";
  for (int r = 0; r < 3; ++r) {
    std::snprintf(buf, sizeof buf, "  R[%d]        % .6f % .6f % .6f\n", r,
                  frame.orientation.rotation(r, 0), frame.orientation.rotation(r, 1),
                  frame.orientation.rotation(r, 2));
    o << buf;
  }

  if (truth) {
    o << "Versus reference\n";
    const bool ok_models = truth->motion_model == frame.origin.motion_model &&
                           truth->wrench_model == frame.origin.wrench_model;
    o << "  models      " << (ok_models ? "match" : "MISMATCH") << " (expected "
      << ToString(truth->motion_model) << ", " << ToString(truth->wrench_model) << ")\n";
    if (truth->expected_viewpoint)
      o << "  viewpoint   "
        << (*truth->expected_viewpoint == frame.origin.viewpoint ? "match" : "MISMATCH")
        << " (expected " << ToString(*truth->expected_viewpoint) << ")\n";
    std::snprintf(buf, sizeof buf, "  %-8s %-18s %-18s %s\n", "anchor", "origin dist [mm]",
                  "axis angle [deg]", "common normal [mm]");
    o << buf;
    for (bool motion : {true, false}) {
      const FrameComparison c = CompareFrame(frame, *truth, motion);
      std::snprintf(buf, sizeof buf, "  %-8s %-18.3f %-18.3f %.3f\n", motion ? "motion" : "wrench",
                    c.origin_distance * 1e3, c.axis_angle * 180.0 / std::numbers::pi, c.common_normal * 1e3);
      o << buf;
    }
  }
  return o.str();
}

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Task-frame derivation from demonstrations and closed-loop evaluation"};
  app.name("taskframe");
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Configuration / scenario file (JSON)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_flag("--verbose,-v", g.verbose, "Progress messages on stderr");

  std::string synth_spec;
  int synth_trials = 0;
  auto* synth = app.add_subcommand("synth", "Generate synthetic demonstrations and ground truth");
  synth->add_option("spec", synth_spec, "Scenario spec (JSON); or use --config");
  synth->add_option("--trials", synth_trials, "Override the number of trials");

  std::vector<std::string> derive_trials;
  std::string derive_truth;
  auto* derive = app.add_subcommand("derive", "Derive the task frame and task model");
  derive->add_option("trials", derive_trials, "Trial CSV files")->required();
  derive->add_option("--truth", derive_truth, "Ground truth to attach to the report");

  std::string sim_model, sim_scenario;
  auto* simulate = app.add_subcommand("simulate", "Run the constraint controller in simulation");
  simulate->add_option("model", sim_model, "Task model (JSON)")->required();
  simulate->add_option("scenario", sim_scenario, "Scenario (JSON); or use --config");

  std::string rep_path, rep_truth, rep_simlog;
  auto* report = app.add_subcommand("report", "Render a derivation report");
  report->add_option("report", rep_path, "report.json written by derive")->required();
  report->add_option("--truth", rep_truth, "Ground truth file");
  report->add_option("--simlog", rep_simlog, "Simulation log; writes plot data to --out");

  for (auto* sub : {synth, derive, simulate, report}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  g.seed_given = seed_opt->count() > 0;

  Context ctx(g, out, err);
  WarningSink previous = SetWarningSink([&err](const std::string& m) { err << "warning: " << m << "\n"; });
  int code = kExitOk;
  try {
    if (*synth) code = CmdSynth(ctx, synth_spec, synth_trials);
    else if (*derive) code = CmdDerive(ctx, derive_trials, derive_truth);
    else if (*simulate) code = CmdSimulate(ctx, sim_model, sim_scenario);
    else if (*report) code = CmdReport(ctx, rep_path, rep_truth, rep_simlog);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    code = e.code() == ErrorCode::kNumerical ? kExitNumerical : kExitInput;
  } catch (const Json::exception& e) {
    err << "error: malformed input: " << e.what() << "\n";
    code = kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    code = kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    code = kExitInternal;
  }
  SetWarningSink(previous);
  return code;
}

}  // namespace taskframe
