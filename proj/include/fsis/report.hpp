// Runs scenario tasks and writes a deterministic report bundle:
//   summary.txt    human-readable verdicts, bounds, caveats and tolerances
//   summary.csv    every summary entry as (section, key, value)
//   taskNN_*.csv   per-node tables
//   manifest.json  index of outputs with the input hash
#pragma once

#include "fsis/common.hpp"
#include "fsis/fibers.hpp"
#include "fsis/gramian.hpp"
#include "fsis/sampling.hpp"
#include "fsis/scenario.hpp"
#include "fsis/subspaces.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fsis {

inline constexpr const char* kToolVersion = "0.1.0";

struct Table {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    auto emit = [&](const std::vector<std::string>& cells) {
      for (std::size_t k = 0; k < cells.size(); ++k) {
        if (k) out += ',';
        out += cells[k];
      }
      out += '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    return out;
  }
};

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Summary text plus tables. Every number placed in the summary goes
/// through value(), which mirrors it into summary.csv.
class ReportBundle {
 public:
  void heading(const std::string& text) {
    section_ = text;
    summary_ += "\n[" + text + "]\n";
  }

  void value(const std::string& key, double v) { entry(key, format_double(v)); }
  void value(const std::string& key, std::size_t v) { entry(key, std::to_string(v)); }
  void value(const std::string& key, int v) { entry(key, std::to_string(v)); }
  void flag(const std::string& key, bool v) { entry(key, v ? "yes" : "no"); }
  void text(const std::string& key, const std::string& v) { entry(key, v); }
  void note(const std::string& v) {
    summary_ += "  " + v + "\n";
    csv_.push_back({section_, "note", v});
  }

  Table& table(std::string file, std::vector<std::string> header) {
    tables_.push_back(Table{std::move(file), std::move(header), {}});
    text("table", tables_.back().file);
    return tables_.back();
  }

  const std::vector<Table>& tables() const { return tables_; }
  const std::string& summary() const { return summary_; }

  std::string summary_csv() const {
    std::string out = "section,key,value\n";
    for (const auto& r : csv_) out += csv_escape(r[0]) + "," + csv_escape(r[1]) + "," + csv_escape(r[2]) + "\n";
    return out;
  }

 private:
  void entry(const std::string& key, const std::string& v) {
    summary_ += "  " + key + " = " + v + "\n";
    csv_.push_back({section_, key, v});
  }

  std::string section_ = "scenario";
  std::string summary_;
  std::vector<std::array<std::string, 3>> csv_;
  std::vector<Table> tables_;
};

struct SpectrumRow {
  std::vector<double> omega;
  double sigma2_min_nonzero = 0.0;
  double sigma2_max = 0.0;
  std::size_t rank = 0;
  std::size_t dim = 0;
};

/// Per-node σ² range, cross-gramian rank and dim_S, with the subspace's
/// generators in canonical Parseval form. Rows follow grid order.
inline std::vector<SpectrumRow> spectrum_curve(std::span<const GeneratorSpec> subspace, std::span<const GeneratorSpec> sampling,
                                               const FrequencyGrid& grid, const Tolerances& tol) {
  const SisStability st = sis_stability(subspace, sampling, grid, tol);
  std::vector<SpectrumRow> rows;
  rows.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& n = st.nodes[i];
    rows.push_back(SpectrumRow{grid.nodes[i].omega, n.sigma2_min_nonzero, n.sigma2_max, n.rank, n.dim});
  }
  return rows;
}

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 when some verdict is negative
  std::vector<std::string> files;
};

namespace detail {

inline std::vector<std::string> omega_header(std::size_t dimension) {
  if (dimension == 1) return {"omega"};
  std::vector<std::string> h;
  for (std::size_t d = 1; d <= dimension; ++d) h.push_back("omega_" + std::to_string(d));
  return h;
}

inline std::vector<std::string> omega_cells(const GridNode& node) {
  std::vector<std::string> cells;
  for (double w : node.omega) cells.push_back(format_double(w));
  return cells;
}

inline std::string file_stem(std::size_t index, const TaskSpec& task) {
  std::string stem = (index < 9 ? "task0" : "task") + std::to_string(index + 1) + "_" + task.type;
  if (!task.label.empty()) stem += "_" + task.label;
  for (char& c : stem)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return stem;
}

inline std::string sanitize(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
  return s;
}

inline void append_matrix_header(std::vector<std::string>& header, const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::string base = name + "_" + std::to_string(r) + "_" + std::to_string(c);
      header.push_back(base + "_re");
      header.push_back(base + "_im");
    }
}

inline void append_matrix_cells(std::vector<std::string>& row, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(format_double(m(r, c).real()));
      row.push_back(format_double(m(r, c).imag()));
    }
}

struct TaskContext {
  const Scenario& scenario;
  const FrequencyGrid& grid;
  const Tolerances& tol;
  ReportBundle& bundle;
  std::string stem;
  bool negative = false;
};

inline void run_dimension(TaskContext& ctx, const TaskSpec& task) {
  const std::string name = task.args["subspace"].get<std::string>();
  const auto gens = ctx.scenario.subspace_generators(name);
  const FrameAnalysis fa = frame_analysis(gens, ctx.grid, ctx.tol.rank_tol, ctx.tol.spec_tol);
  auto& b = ctx.bundle;
  b.text("subspace", name);
  b.value("generators", gens.size());
  b.value("length (max dim)", fa.length_estimate);
  b.flag("dimension function constant", fa.dim_fn.is_constant());
  b.value("Bessel bound beta", fa.bessel_bound);
  if (fa.has_lower_bound) {
    b.value("lower frame bound alpha", fa.frame_lower);
    b.value("gap ratio alpha/beta", fa.gap_ratio);
  } else {
    b.note("no positive alpha found above tolerance");
  }
  b.flag("frame sequence", fa.is_frame_sequence);
  b.flag("Riesz basis of translates", fa.is_riesz);
  if (gens.empty())
    b.note("empty generator set: no spectrum");
  else if (!fa.dim_fn.is_constant())
    b.note("dimension function non-constant: Riesz basis of translates does not exist");
  else if (!fa.is_riesz)
    b.note("dimension function constant but the generators are not a Riesz basis of translates");

  auto header = omega_header(ctx.grid.dimension);
  for (const char* h : {"dim", "lambda_min_nonzero", "lambda_max"}) header.push_back(h);
  Table& t = b.table(ctx.stem + ".csv", header);
  for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
    auto row = omega_cells(ctx.grid.nodes[i]);
    row.push_back(std::to_string(fa.dim_fn.values[i]));
    row.push_back(format_double(fa.nodes[i].lambda_min_nonzero));
    row.push_back(format_double(fa.nodes[i].lambda_max));
    t.rows.push_back(std::move(row));
  }
}

inline Table& spectrum_table(TaskContext& ctx, const std::vector<SpectrumRow>& rows, const std::string& file) {
  auto header = omega_header(ctx.grid.dimension);
  for (const char* h : {"sigma2_min_nonzero", "sigma2_max", "rank", "dim"}) header.push_back(h);
  Table& t = ctx.bundle.table(file, header);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto row = omega_cells(ctx.grid.nodes[i]);
    row.push_back(format_double(rows[i].sigma2_min_nonzero));
    row.push_back(format_double(rows[i].sigma2_max));
    row.push_back(std::to_string(rows[i].rank));
    row.push_back(std::to_string(rows[i].dim));
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void note_truncation(TaskContext& ctx, const std::string& subspace) {
  if (ctx.scenario.subspaces.at(subspace).truncated)
    ctx.bundle.note("warning: subspace " + subspace + " is a finite prefix of a countable generator list; the per-node kernel test applies to the prefix");
}

inline void run_spectrum_curve(TaskContext& ctx, const TaskSpec& task) {
  const std::string name = task.args["subspace"].get<std::string>();
  const auto gens = ctx.scenario.subspace_generators(name);
  const auto psi = ctx.scenario.sampling_generators();
  const auto rows = spectrum_curve(gens, psi, ctx.grid, ctx.tol);
  ctx.bundle.text("subspace", name);
  ctx.bundle.value("sampling functions", psi.size());
  note_truncation(ctx, name);
  spectrum_table(ctx, rows, ctx.stem + ".csv");
}

inline void run_analyze_sis(TaskContext& ctx, const TaskSpec& task) {
  const std::string name = task.args["subspace"].get<std::string>();
  const auto gens = ctx.scenario.subspace_generators(name);
  const auto psi = ctx.scenario.sampling_generators();
  const SisInjectivity inj = sis_injectivity(gens, psi, ctx.grid, ctx.tol);
  const SisStability st = sis_stability(gens, psi, ctx.grid, ctx.tol);
  auto& b = ctx.bundle;
  b.text("subspace", name);
  b.value("sampling functions", psi.size());
  b.value("sampling Bessel bound", inj.sampling_bessel_bound);
  note_truncation(ctx, name);
  b.flag("injective", inj.injective);
  b.value("rank-test failing nodes", inj.witness_nodes.size());
  if (!inj.witness_nodes.empty()) b.value("first failing node", inj.witness_nodes.front());
  const bool stable = st.bounds.stable && inj.injective;
  b.flag("stable", stable);
  if (stable && st.bounds.has_bounds) {
    b.value("stability bound alpha", st.bounds.alpha);
    b.value("stability bound beta", st.bounds.beta);
  }
  if (!stable && !st.bounds.reason.empty()) b.note("stability fails: " + st.bounds.reason);
  if (!inj.injective || !stable) ctx.negative = true;

  std::vector<SpectrumRow> rows;
  for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
    const auto& n = st.nodes[i];
    rows.push_back(SpectrumRow{ctx.grid.nodes[i].omega, n.sigma2_min_nonzero, n.sigma2_max, n.rank, n.dim});
  }
  spectrum_table(ctx, rows, ctx.stem + ".csv");
}

inline void run_angle(TaskContext& ctx, const TaskSpec& task) {
  const std::string u_name = task.args["u"].get<std::string>();
  const std::string v_name = task.args["v"].get<std::string>();
  SubspacePair pair{ctx.scenario.subspace_generators(u_name), ctx.scenario.subspace_generators(v_name)};
  const bool has_frames = task.args.contains("frames");
  std::vector<GeneratorSpec> x_gens, xp_gens;
  FiberWindow window = pair.window();
  if (has_frames) {
    x_gens = ctx.scenario.subspace_generators(task.args["frames"]["u_ominus"].get<std::string>());
    xp_gens = ctx.scenario.subspace_generators(task.args["frames"]["v_ominus"].get<std::string>());
    window = merge_windows(window, merge_windows(fiber_window(x_gens), fiber_window(xp_gens)));
  }
  const AngleReport report = friedrichs_angle(pair, ctx.grid, ctx.tol, &window);

  auto& b = ctx.bundle;
  b.text("U", u_name);
  b.text("V", v_name);
  b.value("Friedrichs cosine (grid max)", report.friedrichs);
  b.value("Dixmier cosine (grid max)", report.dixmier);
  b.value("close_eps", report.close_eps);
  b.value("indeterminate nodes", report.indeterminate_nodes.size());
  b.text("closedness verdict", to_string(report.verdict.verdict));
  b.note(report.verdict.caveat);
  if (report.verdict.verdict == Verdict::not_closed) ctx.negative = true;

  auto header = omega_header(ctx.grid.dimension);
  for (const char* h : {"dixmier", "friedrichs", "friedrichs_ominus", "intersection_rank", "u_ominus_rank", "v_ominus_rank",
                        "iterations", "determinate"})
    header.push_back(h);
  Table& t = b.table(ctx.stem + ".csv", header);
  for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
    const auto& f = report.nodes[i].fiber;
    auto row = omega_cells(ctx.grid.nodes[i]);
    row.push_back(format_double(f.dixmier));
    row.push_back(f.determinate ? format_double(f.friedrichs) : "");
    row.push_back(f.determinate ? format_double(f.friedrichs_ominus) : "");
    row.push_back(std::to_string(f.intersection_rank));
    row.push_back(std::to_string(f.u_ominus_rank));
    row.push_back(std::to_string(f.v_ominus_rank));
    row.push_back(std::to_string(f.iterations));
    row.push_back(f.determinate ? "1" : "0");
    t.rows.push_back(std::move(row));
  }

  if (!has_frames) return;
  // Supplied generators of U ⊖ V and V ⊖ U: Gramians, cross Gramian, the
  // frame formula, and a grid-level check that they span the ominus fibers.
  const auto nx = static_cast<Eigen::Index>(x_gens.size());
  const auto nxp = static_cast<Eigen::Index>(xp_gens.size());
  auto fheader = omega_header(ctx.grid.dimension);
  for (const char* h : {"friedrichs_supplied", "u_span_ok", "v_span_ok"}) fheader.push_back(h);
  append_matrix_header(fheader, "G_X", nx, nx);
  append_matrix_header(fheader, "G_Xp", nxp, nxp);
  append_matrix_header(fheader, "G_X_Xp", nxp, nx);
  std::size_t span_failures = 0;
  double max_gap = 0.0;
  std::vector<std::vector<std::string>> frows;
  for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
    const auto& node = ctx.grid.nodes[i];
    const auto& f = report.nodes[i].fiber;
    const FiberMatrix fx = fiberize(x_gens, node, window);
    const FiberMatrix fxp = fiberize(xp_gens, node, window);
    const double c_supplied = friedrichs_frame_formula(fx.entries, fxp.entries, ctx.tol.spec_tol);
    bool u_ok = false, v_ok = false;
    if (f.determinate) {
      u_ok = (fiber_projection(fx, ctx.tol.rank_tol) - f.u_ominus_basis * f.u_ominus_basis.adjoint()).norm() < 1e-8;
      v_ok = (fiber_projection(fxp, ctx.tol.rank_tol) - f.v_ominus_basis * f.v_ominus_basis.adjoint()).norm() < 1e-8;
      max_gap = std::max(max_gap, std::abs(c_supplied - f.friedrichs));
    }
    if (!u_ok || !v_ok) ++span_failures;
    auto row = omega_cells(node);
    row.push_back(format_double(c_supplied));
    row.push_back(u_ok ? "1" : "0");
    row.push_back(v_ok ? "1" : "0");
    append_matrix_cells(row, gramian_fiber(fx).matrix);
    append_matrix_cells(row, gramian_fiber(fxp).matrix);
    append_matrix_cells(row, cross_gramian_fiber(fx, fxp).matrix);
    frows.push_back(std::move(row));
  }
  b.text("supplied U-ominus-V frame", task.args["frames"]["u_ominus"].get<std::string>());
  b.text("supplied V-ominus-U frame", task.args["frames"]["v_ominus"].get<std::string>());
  b.value("nodes where supplied frames miss the ominus fibers", span_failures);
  b.value("max |supplied-frame cosine - computed cosine|", max_gap);
  b.note("supplied frames are validated on grid nodes only");
  Table& ft = b.table(ctx.stem + "_frames.csv", fheader);
  ft.rows = std::move(frows);
}

inline void report_union(TaskContext& ctx, const SamplingReport& r) {
  auto& b = ctx.bundle;
  b.value("subspace pairs", r.pairs.size());
  b.value("sampling functions (#I)", r.sample_count);
  b.value("required samples (max pair dimension)", r.required_samples);
  b.flag("meets sample lower bound", r.meets_lower_bound);
  b.flag("injective on union", r.injective);
  b.text("injectivity scope", to_string(r.scope));
  b.flag("stable on union", r.stable);
  if (r.stable && r.has_bounds) {
    b.value("union stability bound alpha", r.alpha);
    b.value("union stability bound beta", r.beta);
  }
  for (const auto& n : r.notes) b.note(n);
  if (!r.injective || !r.stable) ctx.negative = true;

  Table& t = b.table(ctx.stem + "_pairs.csv", {"pair", "gamma", "theta", "dimension", "injective", "stable", "alpha", "beta",
                                               "sum_verdict", "friedrichs", "scope", "failing_nodes"});
  for (const auto& p : r.pairs) {
    t.rows.push_back({csv_escape(p.name), std::to_string(p.gamma), std::to_string(p.theta), std::to_string(p.dimension),
                      p.injective ? "1" : "0", p.stability.stable ? "1" : "0",
                      p.stability.has_bounds ? format_double(p.stability.alpha) : "",
                      p.stability.has_bounds ? format_double(p.stability.beta) : "", to_string(p.sum_verdict),
                      format_double(p.friedrichs), to_string(p.scope), std::to_string(p.failing_nodes.size())});
  }
}

inline void run_analyze_union(TaskContext& ctx, const TaskSpec& task) {
  const std::string mode = task.args.value("mode", std::string("sis"));
  auto& b = ctx.bundle;
  b.text("mode", mode);
  if (mode == "finite-dim") {
    const FiniteDimSpec& fd = *ctx.scenario.finite_dim;
    FdUnionModel model;
    if (task.args.contains("union")) {
      for (const auto& n : task.args["union"]) {
        const auto name = n.get<std::string>();
        const auto it = std::find(fd.names.begin(), fd.names.end(), name);
        model.names.push_back(name);
        model.bases.push_back(fd.bases[static_cast<std::size_t>(it - fd.names.begin())]);
      }
    } else {
      model.names = fd.names;
      model.bases = fd.bases;
    }
    b.value("ambient dimension", fd.ambient);
    b.value("subspaces", model.names.size());
    report_union(ctx, fd_union_report(model, fd.sampling, ctx.tol));
    return;
  }

  SisUnionModel model;
  for (const auto& n : task.args["union"]) {
    const auto name = n.get<std::string>();
    model.names.push_back(name);
    model.generators.push_back(ctx.scenario.subspace_generators(name));
    note_truncation(ctx, name);
  }
  const auto psi = ctx.scenario.sampling_generators();
  const SamplingReport r = sis_union_report(model, psi, ctx.grid, ctx.tol);
  b.value("subspaces", model.names.size());
  b.value("sampling Bessel bound", r.sampling_bessel_bound);
  report_union(ctx, r);
  for (const auto& p : r.pairs) {
    std::vector<SpectrumRow> rows;
    for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
      const auto& n = p.nodes[i];
      rows.push_back(SpectrumRow{ctx.grid.nodes[i].omega, n.sigma2_min_nonzero, n.sigma2_max, n.rank, n.dim});
    }
    spectrum_table(ctx, rows, ctx.stem + "_pair_" + sanitize(p.name) + ".csv");
  }
}

}  // namespace detail

/// Executes every task in order and writes the bundle into output_dir.
inline RunResult run(const Scenario& scenario, const std::filesystem::path& output_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(output_dir);

  ReportBundle bundle;
  bundle.heading("scenario");
  bundle.text("tool", std::string("fsis ") + kToolVersion);
  bundle.text("scenario", scenario.source_name);
  bundle.text("input sha256", scenario.input_hash);
  bundle.value("dimension", scenario.dimension);
  bundle.value("grid nodes per axis", scenario.grid);
  bundle.value("rank_tol", scenario.tolerances.rank_tol);
  bundle.value("spec_tol", scenario.tolerances.spec_tol);
  bundle.value("conv_eps", scenario.tolerances.conv_eps);
  bundle.value("max_iter", scenario.tolerances.max_iter);
  bundle.value("close_eps", scenario.tolerances.close_eps);
  bundle.value("tasks", scenario.tasks.size());
  bundle.note("'for a.e. omega' statements are evaluated on a midpoint grid; verdicts are numerical certificates");

  FrequencyGrid grid = midpoint_grid(scenario.dimension, scenario.grid);
  for (const auto& w : separate_from_breakpoints(grid, scenario.generators)) bundle.note("warning: " + w);

  RunResult result;
  bool negative = false;
  for (std::size_t k = 0; k < scenario.tasks.size(); ++k) {
    const TaskSpec& task = scenario.tasks[k];
    bundle.heading("task " + std::to_string(k + 1) + ": " + task.type + (task.label.empty() ? "" : " (" + task.label + ")"));
    detail::TaskContext ctx{scenario, grid, scenario.tolerances, bundle, detail::file_stem(k, task), false};
    try {
      if (task.type == "dimension")
        detail::run_dimension(ctx, task);
      else if (task.type == "spectrum-curve")
        detail::run_spectrum_curve(ctx, task);
      else if (task.type == "analyze-sis")
        detail::run_analyze_sis(ctx, task);
      else if (task.type == "angle")
        detail::run_angle(ctx, task);
      else if (task.type == "analyze-union")
        detail::run_analyze_union(ctx, task);
      else
        throw Error("unknown task type '" + task.type + "'");
    } catch (const std::exception& e) {
      throw Error("task " + std::to_string(k + 1) + " (" + task.type + "): " + e.what());
    }
    negative = negative || ctx.negative;
  }
  result.exit_code = negative ? 2 : 0;

  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(output_dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + (output_dir / name).string() + "'");
    out << content;
    result.files.push_back(name);
    return sha256_hex(content);
  };

  nlohmann::json manifest;
  manifest["tool"] = "fsis";
  manifest["version"] = kToolVersion;
  manifest["scenario"] = scenario.source_name;
  manifest["input_sha256"] = scenario.input_hash;
  manifest["exit_code"] = result.exit_code;
  manifest["outputs"] = nlohmann::json::array();
  const std::string summary = "fsis report\n" + bundle.summary();
  manifest["outputs"].push_back({{"file", "summary.txt"}, {"sha256", write("summary.txt", summary)}});
  manifest["outputs"].push_back({{"file", "summary.csv"}, {"sha256", write("summary.csv", bundle.summary_csv())}});
  for (const auto& t : bundle.tables())
    manifest["outputs"].push_back({{"file", t.file}, {"rows", t.rows.size()}, {"sha256", write(t.file, t.render())}});
  write("manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace fsis
