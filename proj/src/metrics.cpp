#include "lrsmooth/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/numerics/svd.hpp"
#include "lrsmooth/text_format.hpp"

namespace lrsmooth {

double rms(Eigen::MatrixXd const &X, Eigen::MatrixXd const &X_true, std::span<Index const> idx) {
  if (X.rows() != X_true.rows() || X.cols() != X_true.cols()) throw DimensionError("rms: shape mismatch");
  if (idx.empty()) throw ArgumentError("rms: index set is empty");
  double sum = 0;
  for (Index k : idx) {
    if (k < 0 || k >= X.size()) throw ArgumentError("rms: index out of range");
    double const e = X.data()[k] - X_true.data()[k];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(idx.size()));
}

RmsSplit rms_split(GridArray<double> const &X, GridArray<double> const &X_true, SamplingMask const &mask) {
  if (!X.same_shape(X_true) || !X.same_shape(mask.flags())) throw DimensionError("rms_split: shape mismatch");
  double so = 0, si = 0;
  std::size_t no = 0, ni = 0;
  auto const x = X.data(), t = X_true.data();
  auto const f = mask.flags().data();
  for (std::size_t k = 0; k < x.size(); ++k) {
    double const e = x[k] - t[k];
    if (f[k]) {
      so += e * e, ++no;
    } else {
      si += e * e, ++ni;
    }
  }
  RmsSplit out;
  out.obs = no ? std::sqrt(so / static_cast<double>(no)) : 0.0;
  out.interp = ni ? std::sqrt(si / static_cast<double>(ni)) : 0.0;
  return out;
}

double terminal_feasibility(Eigen::MatrixXd const &X, Eigen::VectorXd const &b, SamplingOperator const &sampler,
                            double sigma) {
  Eigen::VectorXd const ax = sampler.apply(X);
  if (ax.size() != b.size()) throw DimensionError("terminal_feasibility: b length mismatch");
  return (ax - b).norm() - sigma;
}

std::vector<double> sv_decay(Eigen::MatrixXd const &M, Index count) {
  if (count < 0 || count > std::min(M.rows(), M.cols())) {
    throw ArgumentError("sv_decay: count exceeds the smaller matrix dimension");
  }
  Eigen::VectorXd const s = singular_values(M);
  return {s.data(), s.data() + count};
}

// ---------------------------------------------------------------------------
// Export / import

namespace {

constexpr char const *kMetricHeader = "metric,value";
constexpr char const *kHistoryHeader = "iter,objective,misfit,gap";
constexpr char const *kDecayHeader = "index,singular_value";

bool has_schedule(EvalReport const &r) {
  return r.schedule_period > 0;
}

} // namespace

std::string format_report(EvalReport const &r, ExportOptions const &opt) {
  if (opt.format == ReportFormat::Json) {
    nlohmann::ordered_json j;
    j["solver"] = r.solver;
    j["converged"] = r.converged;
    j["failed"] = r.failed;
    j["failure"] = r.failure;
    j["iterations"] = r.iterations;
    j["sigma"] = r.sigma;
    j["terminal_feasibility"] = r.terminal_feasibility;
    j["rms_obs"] = r.rms_obs;
    j["rms_int"] = r.rms_int;
    j["lambda"] = r.lambda;
    j["schedule_period"] = r.schedule_period;
    j["monotone_violations"] = r.monotone_violations;
    j["majorization_violations"] = r.majorization_violations;
    if (opt.include_timing) j["wall_time"] = r.wall_time;
    auto hist = nlohmann::ordered_json::array();
    for (auto const &h : r.history) {
      nlohmann::ordered_json e;
      e["iter"] = h.iter;
      e["objective"] = h.objective;
      e["misfit"] = h.misfit;
      e["gap"] = h.gap;
      if (opt.include_timing) e["seconds"] = h.seconds;
      hist.push_back(std::move(e));
    }
    j["history"] = std::move(hist);
    j["sv_decay"] = r.sv_decay;
    return j.dump(2) + "\n";
  }

  std::string out = std::string(kMetricHeader) + "\n";
  auto metric = [&](char const *name, std::string const &value) { out += std::string(name) + "," + value + "\n"; };
  metric("solver", r.solver);
  metric("converged", r.converged ? "1" : "0");
  metric("failed", r.failed ? "1" : "0");
  metric("failure", r.failure);
  metric("iterations", std::to_string(r.iterations));
  metric("sigma", format_double(r.sigma));
  metric("terminal_feasibility", format_double(r.terminal_feasibility));
  metric("rms_obs", format_double(r.rms_obs));
  metric("rms_int", format_double(r.rms_int));
  metric("lambda", format_double(r.lambda));
  metric("schedule_period", std::to_string(r.schedule_period));
  metric("monotone_violations", std::to_string(r.monotone_violations));
  metric("majorization_violations", std::to_string(r.majorization_violations));
  if (opt.include_timing) metric("wall_time", format_double(r.wall_time));
  out += "\n";
  out += kHistoryHeader;
  out += opt.include_timing ? ",seconds\n" : "\n";
  for (auto const &h : r.history) {
    out += std::to_string(h.iter) + "," + format_double(h.objective) + "," + format_double(h.misfit) + "," +
           format_double(h.gap);
    if (opt.include_timing) out += "," + format_double(h.seconds);
    out += "\n";
  }
  out += "\n";
  out += std::string(kDecayHeader) + "\n";
  for (std::size_t i = 0; i < r.sv_decay.size(); ++i) {
    out += std::to_string(i + 1) + "," + format_double(r.sv_decay[i]) + "\n";
  }
  return out;
}

void export_report(EvalReport const &report, std::filesystem::path const &path, ExportOptions const &opt) {
  try {
    write_file(path, format_report(report, opt));
  } catch (std::exception const &e) {
    throw std::runtime_error("export_report: " + std::string(e.what()));
  }
}

namespace {

EvalReport parse_json_report(std::string_view text, std::string_view name) {
  EvalReport r;
  try {
    auto const j = nlohmann::json::parse(text);
    r.solver = j.at("solver").get<std::string>();
    r.converged = j.at("converged").get<bool>();
    r.failed = j.at("failed").get<bool>();
    r.failure = j.value("failure", std::string{});
    r.iterations = j.at("iterations").get<int>();
    r.sigma = j.at("sigma").get<double>();
    r.terminal_feasibility = j.at("terminal_feasibility").get<double>();
    r.rms_obs = j.at("rms_obs").get<double>();
    r.rms_int = j.at("rms_int").get<double>();
    r.lambda = j.at("lambda").get<double>();
    r.schedule_period = j.at("schedule_period").get<int>();
    r.monotone_violations = j.at("monotone_violations").get<int>();
    r.majorization_violations = j.at("majorization_violations").get<int>();
    r.wall_time = j.value("wall_time", 0.0);
    for (auto const &e : j.at("history")) {
      r.history.push_back({e.at("iter").get<int>(), e.at("objective").get<double>(), e.at("misfit").get<double>(),
                           e.at("gap").get<double>(), e.value("seconds", 0.0)});
    }
    r.sv_decay = j.at("sv_decay").get<std::vector<double>>();
  } catch (nlohmann::json::exception const &e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  }
  return r;
}

EvalReport parse_csv_report(std::string_view text, std::string_view name) {
  EvalReport r;
  auto const lines = split(text, '\n');
  std::size_t n = 0;
  auto ctx = [&] { return std::string(name) + ":" + std::to_string(n + 1); };
  auto expect = [&](std::string_view header) {
    if (n >= lines.size() || trim(lines[n]) != header) {
      throw ValidationError(ctx() + ": expected header '" + std::string(header) + "'");
    }
    ++n;
  };
  expect(kMetricHeader);
  for (; n < lines.size() && !trim(lines[n]).empty(); ++n) {
    auto const line = trim(lines[n]);
    auto const comma = line.find(',');
    if (comma == std::string_view::npos) throw ValidationError(ctx() + ": expected metric,value");
    auto const key = line.substr(0, comma);
    auto const val = line.substr(comma + 1);
    auto const c = ctx();
    if (key == "solver") r.solver = std::string(val);
    else if (key == "converged") r.converged = parse_int(val, c) != 0;
    else if (key == "failed") r.failed = parse_int(val, c) != 0;
    else if (key == "failure") r.failure = std::string(val);
    else if (key == "iterations") r.iterations = static_cast<int>(parse_int(val, c));
    else if (key == "sigma") r.sigma = parse_double(val, c);
    else if (key == "terminal_feasibility") r.terminal_feasibility = parse_double(val, c);
    else if (key == "rms_obs") r.rms_obs = parse_double(val, c);
    else if (key == "rms_int") r.rms_int = parse_double(val, c);
    else if (key == "lambda") r.lambda = parse_double(val, c);
    else if (key == "schedule_period") r.schedule_period = static_cast<int>(parse_int(val, c));
    else if (key == "monotone_violations") r.monotone_violations = static_cast<int>(parse_int(val, c));
    else if (key == "majorization_violations") r.majorization_violations = static_cast<int>(parse_int(val, c));
    else if (key == "wall_time") r.wall_time = parse_double(val, c);
    else throw ValidationError(c + ": unknown metric '" + std::string(key) + "'");
  }
  ++n;
  if (n >= lines.size()) throw ValidationError(ctx() + ": missing history table");
  auto const hist_header = trim(lines[n]);
  bool const timed = hist_header == std::string(kHistoryHeader) + ",seconds";
  if (!timed) expect(kHistoryHeader);
  else ++n;
  for (; n < lines.size() && !trim(lines[n]).empty(); ++n) {
    auto const f = split(trim(lines[n]), ',');
    if (f.size() != (timed ? 5u : 4u)) throw ValidationError(ctx() + ": wrong history field count");
    auto const c = ctx();
    r.history.push_back({static_cast<int>(parse_int(f[0], c)), parse_double(f[1], c), parse_double(f[2], c),
                         parse_double(f[3], c), timed ? parse_double(f[4], c) : 0.0});
  }
  ++n;
  expect(kDecayHeader);
  for (; n < lines.size() && !trim(lines[n]).empty(); ++n) {
    auto const f = split(trim(lines[n]), ',');
    if (f.size() != 2) throw ValidationError(ctx() + ": expected index,singular_value");
    r.sv_decay.push_back(parse_double(f[1], ctx()));
  }
  return r;
}

} // namespace

void validate_report(EvalReport const &r) {
  if (!(r.rms_obs >= 0) || !(r.rms_int >= 0)) throw ValidationError("report: RMS values must be nonnegative");
  for (std::size_t i = 1; i < r.sv_decay.size(); ++i) {
    if (r.sv_decay[i] > r.sv_decay[i - 1]) throw ValidationError("report: singular values are not non-increasing");
  }
  if (static_cast<int>(r.history.size()) != r.iterations) {
    throw ValidationError("report: history length differs from iteration count");
  }
  if (has_schedule(r)) {
    for (std::size_t i = 1; i < r.history.size(); ++i) {
      auto const &a = r.history[i - 1], &b = r.history[i];
      bool const same_period = (a.iter - 1) / r.schedule_period == (b.iter - 1) / r.schedule_period;
      if (same_period && b.objective > a.objective + 1e-9 * std::abs(a.objective)) {
        throw ValidationError("report: relaxed objective increased at iteration " + std::to_string(b.iter));
      }
    }
  }
}

EvalReport parse_report(std::string_view text, ReportFormat format, std::string_view source_name) {
  EvalReport r = format == ReportFormat::Json ? parse_json_report(text, source_name) : parse_csv_report(text, source_name);
  validate_report(r);
  return r;
}

EvalReport load_report(std::filesystem::path const &path) {
  auto const format = path.extension() == ".json" ? ReportFormat::Json : ReportFormat::Csv;
  return parse_report(read_file(path), format, path.string());
}

EvalReport make_report(SolveResult const &result, GridArray<double> const &completed, GridArray<double> const &truth,
                       SamplingMask const &mask, Index sv_count, int schedule_period) {
  EvalReport r;
  r.solver = result.solver;
  r.converged = result.converged;
  r.failed = result.failed;
  r.failure = result.failure;
  r.iterations = result.iterations;
  r.sigma = result.sigma;
  r.terminal_feasibility = result.terminal_feasibility;
  auto const split_rms = rms_split(completed, truth, mask);
  r.rms_obs = split_rms.obs;
  r.rms_int = split_rms.interp;
  r.lambda = result.lambda;
  r.schedule_period = schedule_period;
  r.monotone_violations = result.monotone_violations;
  r.majorization_violations = result.majorization_violations;
  r.wall_time = result.wall_seconds;
  r.history = result.history;
  if (result.W.size() > 0) {
    r.sv_decay = sv_decay(result.W, std::min<Index>(sv_count, std::min(result.W.rows(), result.W.cols())));
  }
  return r;
}

} // namespace lrsmooth
