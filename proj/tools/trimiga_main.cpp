// Command-line runner for the trimmed isogeometric Poisson experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "trimiga/experiments.hpp"

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw trimiga::config_error("cannot open output file: " + path);
  return os;
}

void dump_matrix(const Eigen::SparseMatrix<double>& A, const std::string& path) {
  std::ofstream os = open_out(path);
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  for (int col = 0; col < A.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it)
      os << it.row() << ' ' << col << ' ' << trimiga::fmt_g(it.value()) << '\n';
}

struct Options {
  std::string config;
  std::string out;
  std::string matrix_out;
  bool quiet = false;
};

template <typename Rows, typename Writer>
void emit(const Rows& rows, Writer&& write, const Options& opt,
          const trimiga::ExperimentConfig& cfg) {
  const std::string path = !opt.out.empty() ? opt.out : cfg.out;
  if (!path.empty()) {
    std::ofstream os = open_out(path);
    write(rows, os);
    if (!opt.quiet) std::cout << "wrote " << path << "\n";
  } else {
    write(rows, std::cout);
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace trimiga;
  CLI::App app{"trimmed isogeometric Poisson solver experiments"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* c = cmd->add_option("--config", opt.config, "experiment config file");
    if (needs_config) c->required();
    cmd->add_option("--out", opt.out, "output CSV path (overrides config)");
    cmd->add_flag("--quiet", opt.quiet, "suppress progress output");
    return cmd;
  };

  auto* cmd_solve = add_common(app.add_subcommand("solve", "single assemble+solve"), true);
  cmd_solve->add_option("--dump-matrix", opt.matrix_out,
                        "write the assembled matrix in coordinate format");
  add_common(app.add_subcommand("stability", "epsilon eigenvalue sweep"), true);
  add_common(app.add_subcommand("convergence", "mesh refinement study"), true);
  add_common(app.add_subcommand("conditioning", "condition number study"), true);
  add_common(app.add_subcommand("verify", "run the built-in invariant suite"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand("verify")) {
      return run_verify(std::cout) ? 0 : 3;
    }
    ExperimentConfig cfg = load_config(opt.config);
    if (app.got_subcommand("stability")) {
      auto rows = run_stability_sweep(cfg);
      emit(rows, [](auto& r, std::ostream& os) { write_stability_csv(r, os); }, opt, cfg);
    } else if (app.got_subcommand("convergence")) {
      auto rows = run_convergence(cfg);
      emit(rows, [](auto& r, std::ostream& os) { write_convergence_csv(r, os); }, opt, cfg);
    } else if (app.got_subcommand("conditioning")) {
      auto rows = run_conditioning(cfg);
      const bool rot = cfg.region_kind == "rotated_rect";
      const std::string sweep = rot ? "alpha" : (!cfg.eps_list.empty() ? "eps" : "h");
      emit(rows,
           [&](auto& r, std::ostream& os) { write_conditioning_csv(r, os, sweep, rot); }, opt,
           cfg);
    } else if (app.got_subcommand("solve")) {
      const int level = cfg.levels.empty() ? 3 : cfg.levels.front();
      SolveOutput out = solve_level(cfg, level);
      if (!opt.matrix_out.empty()) dump_matrix(out.sys.A, opt.matrix_out);
      std::vector<ConvergenceRow> rows{out.row};
      emit(rows, [](auto& r, std::ostream& os) { write_convergence_csv(r, os); }, opt, cfg);
    }
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
