#include "lrsmooth/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ostream>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/grid_io.hpp"
#include "lrsmooth/metrics.hpp"
#include "lrsmooth/pipeline.hpp"
#include "lrsmooth/text_format.hpp"

namespace lrsmooth {

namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

void ensure_dir(fs::path const &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string format_matrix_csv(Eigen::MatrixXd const &M) {
  std::string out;
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j) out += ',';
      out += format_double(M(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string format_history_csv(std::vector<IterationRecord> const &history) {
  std::string out = "iter,objective,misfit,gap\n";
  for (auto const &h : history) {
    out += std::to_string(h.iter) + "," + format_double(h.objective) + "," + format_double(h.misfit) + "," +
           format_double(h.gap) + "\n";
  }
  return out;
}

std::string format_timing_csv(SolveResult const &r) {
  std::string out = "metric,value\nwall_time," + format_double(r.wall_seconds) + "\n\niter,seconds\n";
  for (auto const &h : r.history) out += std::to_string(h.iter) + "," + format_double(h.seconds) + "\n";
  return out;
}

struct LoadedData {
  ReceiverGrid grid;
  SourceSet sources;
  TensorData truth;
  TensorData observed;
  double sigma_budget = 0;
  std::uint64_t hash = 0;
};

LoadedData load_data(fs::path const &dir) {
  LoadedData d;
  std::tie(d.grid, d.sources) = read_grid_meta(dir / "grid.meta");
  std::string const truth_text = read_file(dir / "truth.csv");
  std::string const obs_text = read_file(dir / "observed.csv");
  d.truth = parse_tensor_csv(truth_text, d.grid, d.sources, (dir / "truth.csv").string());
  d.observed = parse_tensor_csv(obs_text, d.grid, d.sources, (dir / "observed.csv").string());
  if (!std::ranges::equal(d.truth.mask.flags().data(), d.observed.mask.flags().data())) {
    throw ValidationError(dir.string() + ": truth.csv and observed.csv disagree on observed entries");
  }
  if (d.observed.mask.count() == 0) throw ValidationError((dir / "observed.csv").string() + ": no observed entries");
  auto const ds = KeyValueText::load(dir / "dataset.ini").by_path((dir / "dataset.ini").string());
  auto const it = ds.find("sigma_budget");
  if (it == ds.end()) throw ValidationError((dir / "dataset.ini").string() + ": missing sigma_budget");
  d.sigma_budget = parse_double(it->second.value, (dir / "dataset.ini").string() + ": sigma_budget");
  d.hash = fnv1a64(read_file(dir / "grid.meta") + truth_text + obs_text);
  return d;
}

struct RunInfo {
  std::string solver;
  std::string data_hash;
};

RunInfo read_run_info(fs::path const &dir) {
  auto const path = dir / "run.ini";
  auto const kv = KeyValueText::load(path).by_path(path.string());
  RunInfo info;
  for (auto const &[key, e] : kv) {
    if (key == "solver") {
      info.solver = e.value;
    } else if (key == "data_hash") {
      info.data_hash = e.value;
    } else if (key != "failed" && key != "failure") {
      throw ValidationError(path.string() + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  if (info.solver.empty() || info.data_hash.empty()) throw ValidationError(path.string() + ": incomplete run record");
  return info;
}

double read_wall_time(fs::path const &dir) {
  auto const path = dir / "timing.csv";
  std::string const text = read_file(path);
  for (auto line : split(text, '\n')) {
    auto const cells = split(trim(line), ',');
    if (cells.size() == 2 && cells[0] == "wall_time") return parse_double(cells[1], path.string() + ": wall_time");
  }
  throw ValidationError(path.string() + ": missing wall_time");
}

} // namespace

RunConfig resolve_config(CommonOptions const &opt) {
  RunConfig c = opt.config ? load_run_config(*opt.config) : RunConfig{};
  if (opt.seed) c.set_seed(*opt.seed);
  return c;
}

int cmd_generate(CommonOptions const &opt, std::ostream &log) {
  RunConfig const c = resolve_config(opt);
  Dataset const d = generate_dataset(c.dataset);
  ensure_dir(opt.out);

  write_grid_meta(opt.out / "grid.meta", d.grid, d.sources);
  write_tensor_csv(opt.out / "truth.csv", {ResidualTensor(d.grid, d.sources, d.truth), d.mask, d.station_sigma});
  write_tensor_csv(opt.out / "observed.csv",
                   {ResidualTensor(d.grid, d.sources, d.observed), d.mask, d.station_sigma});
  write_file(opt.out / "dataset.ini", "n_obs = " + std::to_string(d.mask.count()) + "\nsigma_budget = " +
                                          format_double(d.sigma_budget) + "\ntrue_misfit = " +
                                          format_double(d.true_misfit) + "\nseed = " + std::to_string(c.seed) +
                                          "\n");
  write_file(opt.out / "config.ini", format_run_config(c));
  log << "generated " << d.grid.nx << "x" << d.grid.ny << "x" << d.sources.size() << " tensor, " << d.mask.count()
      << " observations, sigma budget " << format_double(d.sigma_budget) << ", true misfit "
      << format_double(d.true_misfit) << "\n";
  return kExitOk;
}

int cmd_solve(CommonOptions const &opt, fs::path const &data_dir, std::ostream &log) {
  RunConfig const c = resolve_config(opt);
  LoadedData const d = load_data(data_dir);
  Setup const setup = make_setup(d.grid, d.sources, d.observed.tensor.values, d.observed.mask, c.solver.layout);
  ensure_dir(opt.out);

  SolveResult result;
  try {
    result = run_solver(setup, c.solver, d.sigma_budget);
  } catch (NumericalError const &e) {
    result.solver = to_string(c.solver.name);
    result.W = Eigen::MatrixXd::Zero(setup.map.rows(), setup.map.cols());
    result.failed = true;
    result.failure = e.what();
    result.sigma = c.solver.sigma.value_or(d.sigma_budget);
  }

  GridArray<double> const completed = to_tensor(result.W, setup.map);
  Index const sv_count = std::min<Index>(c.sv_count, std::min(result.W.rows(), result.W.cols()));
  EvalReport const report = make_report(result, completed, d.truth.tensor.values, d.observed.mask, sv_count,
                                        c.solver.schedule_period());

  write_tensor_csv(opt.out / "completed.csv",
                   {ResidualTensor(d.grid, d.sources, completed), d.observed.mask, d.observed.station_sigma});
  if (result.factors) {
    write_file(opt.out / "factor_L.csv", format_matrix_csv(result.factors->L));
    write_file(opt.out / "factor_R.csv", format_matrix_csv(result.factors->R));
  }
  write_file(opt.out / "history.csv", format_history_csv(result.history));
  ExportOptions eo;
  eo.format = c.format;
  eo.include_timing = false;
  export_report(report, opt.out / (c.format == ReportFormat::Csv ? "report.csv" : "report.json"), eo);
  write_file(opt.out / "timing.csv", format_timing_csv(result));
  write_file(opt.out / "config.ini", format_run_config(c));
  std::string info = "solver = " + result.solver + "\ndata_hash = " + hex64(d.hash) +
                     "\nfailed = " + (result.failed ? "1" : "0") + "\n";
  if (result.failed) info += "failure = " + result.failure + "\n";
  write_file(opt.out / "run.ini", info);

  for (auto const &w : result.warnings) log << "warning: " << w << "\n";
  log << result.solver << ": feasibility " << format_double(report.terminal_feasibility) << ", rms_obs "
      << format_double(report.rms_obs) << ", rms_int " << format_double(report.rms_int) << ", "
      << result.iterations << " iterations\n";
  if (result.failed) {
    log << "solver failed: " << result.failure << "\n";
    return kExitSolverFailure;
  }
  return kExitOk;
}

int cmd_compare(CommonOptions const &opt, std::vector<fs::path> const &runs, bool require_vr_best,
                std::ostream &log) {
  if (runs.empty()) throw ValidationError("compare: no run directories given");
  std::string table = "algorithm,terminal_feasibility,time_s,rms_obs,rms_int\n";
  std::string hash;
  std::optional<double> vr_rms, best_other;
  for (auto const &dir : runs) {
    RunInfo const info = read_run_info(dir);
    if (hash.empty()) {
      hash = info.data_hash;
    } else if (info.data_hash != hash) {
      throw ValidationError("compare: '" + dir.string() + "' was solved on different data (hash " + info.data_hash +
                            ", expected " + hash + ")");
    }
    fs::path report_path = dir / "report.csv";
    if (!fs::exists(report_path)) report_path = dir / "report.json";
    EvalReport const r = load_report(report_path);
    double const t = read_wall_time(dir);
    table += info.solver + "," + format_double(r.terminal_feasibility) + "," + format_double(t) + "," +
             format_double(r.rms_obs) + "," + format_double(r.rms_int) + "\n";
    if (info.solver == "vr") {
      vr_rms = vr_rms ? std::min(*vr_rms, r.rms_int) : r.rms_int;
    } else {
      best_other = best_other ? std::min(*best_other, r.rms_int) : r.rms_int;
    }
  }
  ensure_dir(opt.out);
  write_file(opt.out / "comparison.csv", table);
  log << table;
  if (require_vr_best) {
    if (!vr_rms) {
      log << "no vr run to check\n";
      return kExitSolverFailure;
    }
    if (best_other && !(*vr_rms < *best_other)) {
      log << "vr rms_int " << format_double(*vr_rms) << " is not below the best other run "
          << format_double(*best_other) << "\n";
      return kExitSolverFailure;
    }
  }
  return kExitOk;
}

int cmd_svd(CommonOptions const &opt, fs::path const &tensor_csv, SvdOptions const &svd, std::ostream &log) {
  RunConfig const c = resolve_config(opt);
  fs::path const meta = svd.meta.value_or(tensor_csv.parent_path() / "grid.meta");
  auto const [grid, sources] = read_grid_meta(meta);
  TensorData data = read_tensor_csv(tensor_csv, grid, sources);
  if (svd.masked) {
    auto v = data.tensor.values.data();
    auto const f = data.mask.flags().data();
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!f[k]) v[k] = 0.0;
    }
  }
  auto const order = compute_source_energy(data.tensor, data.mask).order;
  IndexMap map;
  if (svd.layout == Layout::ReceiverBySource) {
    map = IndexMap::receiver_by_source(grid.nx, grid.ny, order);
  } else {
    auto const [bx, by] = default_block_layout(sources.size());
    map = IndexMap::block(grid.nx, grid.ny, order, bx, by);
  }
  Eigen::MatrixXd const M = matricize(data.tensor, map).matrix;
  int count = svd.count.value_or(c.sv_count);
  if (count < 1) throw ValidationError("svd: count must be positive");
  Index const limit = std::min(M.rows(), M.cols());
  if (count > limit) {
    log << "warning: count " << count << " exceeds the smaller dimension " << limit << "; clipped\n";
    count = static_cast<int>(limit);
  }
  auto const s = sv_decay(M, count);
  std::string out = "index,singular_value\n";
  for (std::size_t i = 0; i < s.size(); ++i) out += std::to_string(i + 1) + "," + format_double(s[i]) + "\n";
  ensure_dir(opt.out);
  write_file(opt.out / "decay.csv", out);
  log << "wrote " << s.size() << " singular values of the " << M.rows() << "x" << M.cols() << " "
      << to_string(svd.layout) << " matricization\n";
  return kExitOk;
}

} // namespace lrsmooth
