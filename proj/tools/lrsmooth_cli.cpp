#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrsmooth/commands.hpp"
#include "lrsmooth/errors.hpp"

namespace {

void add_common(CLI::App *cmd, lrsmooth::CommonOptions &opt) {
  cmd->add_option("--config", opt.config, "Config file (key = value with sections)")->check(CLI::ExistingFile);
  cmd->add_option("--out", opt.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", opt.seed, "Master seed override");
}

} // namespace

int main(int argc, char **argv) {
  using namespace lrsmooth;
  CLI::App app{"Low-rank plus smoothness completion of residual grids"};
  app.require_subcommand(1);

  CommonOptions opt;

  auto *gen = app.add_subcommand("generate", "Generate a synthetic residual dataset");
  add_common(gen, opt);

  std::filesystem::path data_dir;
  auto *solve = app.add_subcommand("solve", "Complete a generated dataset with one solver");
  add_common(solve, opt);
  solve->add_option("--data", data_dir, "Directory written by generate")->required()->check(CLI::ExistingDirectory);

  std::vector<std::filesystem::path> runs;
  bool require_vr_best = false;
  auto *compare = app.add_subcommand("compare", "Tabulate solve runs on the same data");
  add_common(compare, opt);
  compare->add_option("runs", runs, "Directories written by solve")->required()->check(CLI::ExistingDirectory);
  compare->add_flag("--require-vr-best", require_vr_best, "Fail unless vr has the smallest rms_int");

  std::filesystem::path tensor;
  SvdOptions svd;
  std::string layout = "block";
  auto *svdcmd = app.add_subcommand("svd", "Singular value decay of a tensor CSV");
  add_common(svdcmd, opt);
  svdcmd->add_option("tensor", tensor, "Tensor CSV")->required()->check(CLI::ExistingFile);
  svdcmd->add_option("--layout", layout, "block or receiver_by_source")->capture_default_str();
  svdcmd->add_option("--count", svd.count, "Number of singular values");
  svdcmd->add_flag("--masked", svd.masked, "Zero unobserved entries first");
  svdcmd->add_option("--meta", svd.meta, "Grid metadata (default: grid.meta beside the tensor)");

  try {
    app.parse(argc, argv);
  } catch (CLI::ParseError const &e) {
    int const code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*gen) return cmd_generate(opt, std::cout);
    if (*solve) return cmd_solve(opt, data_dir, std::cout);
    if (*compare) return cmd_compare(opt, runs, require_vr_best, std::cout);
    svd.layout = parse_layout(layout);
    return cmd_svd(opt, tensor, svd, std::cerr);
  } catch (ValidationError const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (std::invalid_argument const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (NumericalError const &e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitSolverFailure;
  } catch (std::exception const &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
