// fsis: run shift-invariant-space analyses described by a JSON scenario.
//
//   fsis run SCENARIO [--out DIR] [--grid M] [--rank-tol X] [--spec-tol X]
//                     [--close-eps X] [--max-iter N] [--conv-eps X]
//   fsis check SCENARIO
//
// Exit status: 0 success, 2 when a verdict is negative (NotClosed,
// not injective, not stable), 1 on any error.
#include "fsis/report.hpp"
#include "fsis/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Frame, angle and sampling analyses for shift-invariant spaces"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string out_dir = "fsis-out";
  std::optional<std::size_t> grid;
  std::optional<double> rank_tol, spec_tol, close_eps, conv_eps;
  std::optional<int> max_iter;

  auto* run = app.add_subcommand("run", "execute every task and write the report bundle");
  run->add_option("scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--grid", grid, "grid nodes per axis")->check(CLI::PositiveNumber);
  run->add_option("--rank-tol", rank_tol, "relative singular value cut")->check(CLI::PositiveNumber);
  run->add_option("--spec-tol", spec_tol, "relative eigenvalue cut")->check(CLI::PositiveNumber);
  run->add_option("--close-eps", close_eps, "closedness margin")->check(CLI::PositiveNumber);
  run->add_option("--conv-eps", conv_eps, "alternating projection stop threshold")->check(CLI::PositiveNumber);
  run->add_option("--max-iter", max_iter, "alternating projection iteration cap")->check(CLI::PositiveNumber);

  auto* check = app.add_subcommand("check", "validate a scenario without running it");
  check->add_option("scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    fsis::Scenario s = fsis::load_scenario(scenario_path);
    if (check->parsed()) {
      std::cout << s.source_name << ": ok, " << s.generators.size() << " generators, " << s.tasks.size() << " tasks\n";
      return 0;
    }
    if (grid) s.grid = *grid;
    if (rank_tol) s.tolerances.rank_tol = *rank_tol;
    if (spec_tol) s.tolerances.spec_tol = *spec_tol;
    if (close_eps) s.tolerances.close_eps = *close_eps;
    if (conv_eps) s.tolerances.conv_eps = *conv_eps;
    if (max_iter) s.tolerances.max_iter = *max_iter;
    const fsis::RunResult r = fsis::run(s, out_dir);
    std::cout << fsis::read_file(std::filesystem::path(out_dir) / "summary.txt");
    return r.exit_code;
  } catch (const fsis::SchemaError& e) {
    std::cerr << "fsis: schema error at " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "fsis: " << e.what() << "\n";
  }
  return 1;
}
