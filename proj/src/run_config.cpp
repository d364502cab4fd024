#include "lrsmooth/run_config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/text_format.hpp"

namespace lrsmooth {

namespace {

using Setter = std::function<void(RunConfig &, std::string_view value, std::string const &ctx)>;
using Getter = std::function<std::string(RunConfig const &)>;

struct Key {
  std::string section;
  std::string name;
  Setter set;
  Getter get;
  std::string path() const { return section + "." + name; }
};

template <class Acc> Key real_key(char const *section, char const *name, Acc acc) {
  return {section, name,
          [acc](RunConfig &c, std::string_view v, std::string const &ctx) { acc(c) = parse_double(v, ctx); },
          [acc](RunConfig const &c) { return format_double(acc(const_cast<RunConfig &>(c))); }};
}

template <class Acc> Key int_key(char const *section, char const *name, Acc acc) {
  return {section, name,
          [acc](RunConfig &c, std::string_view v, std::string const &ctx) {
            long long const x = parse_int(v, ctx);
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
              throw ValidationError(ctx + ": integer out of range");
            }
            acc(c) = static_cast<int>(x);
          },
          [acc](RunConfig const &c) { return std::to_string(acc(const_cast<RunConfig &>(c))); }};
}

std::uint64_t parse_u64(std::string_view v, std::string const &ctx) {
  std::uint64_t x = 0;
  auto const [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ValidationError(ctx + ": expected an unsigned 64-bit integer, got '" + std::string(v) + "'");
  }
  return x;
}

DerivativeMode parse_derivative(std::string_view v, std::string const &ctx) {
  if (v == "analytic") return DerivativeMode::Analytic;
  if (v == "complex_step") return DerivativeMode::ComplexStep;
  throw ValidationError(ctx + ": expected analytic or complex_step, got '" + std::string(v) + "'");
}

char const *to_string(DerivativeMode m) { return m == DerivativeMode::Analytic ? "analytic" : "complex_step"; }

Preset parse_preset(std::string_view v, std::string const &ctx) {
  if (v == "reference") return Preset::Reference;
  if (v == "benchmark") return Preset::Benchmark;
  throw ValidationError(ctx + ": expected reference or benchmark, got '" + std::string(v) + "'");
}

std::vector<Key> const &keys() {
  static std::vector<Key> const table = [] {
    std::vector<Key> k;
    k.push_back({"run", "seed",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) { c.set_seed(parse_u64(v, ctx)); },
                 [](RunConfig const &c) { return std::to_string(c.seed); }});

    k.push_back(int_key("grid", "nx", [](RunConfig &c) -> int & { return c.dataset.grid.nx; }));
    k.push_back(int_key("grid", "ny", [](RunConfig &c) -> int & { return c.dataset.grid.ny; }));
    k.push_back(real_key("grid", "spacing_km", [](RunConfig &c) -> double & { return c.dataset.grid.spacing; }));
    k.push_back(real_key("grid", "origin_x_km", [](RunConfig &c) -> double & { return c.dataset.grid.origin_x; }));
    k.push_back(real_key("grid", "origin_y_km", [](RunConfig &c) -> double & { return c.dataset.grid.origin_y; }));

    k.push_back(int_key("sources", "count", [](RunConfig &c) -> int & { return c.dataset.n_sources; }));
    k.push_back(real_key("sources", "margin_km", [](RunConfig &c) -> double & { return c.dataset.source_margin_km; }));

    k.push_back(int_key("field", "n_anomalies", [](RunConfig &c) -> int & { return c.dataset.field.n_anomalies; }));
    k.push_back(int_key("field", "amplitude_rank", [](RunConfig &c) -> int & { return c.dataset.field.amplitude_rank; }));
    k.push_back(real_key("field", "amplitude_scale", [](RunConfig &c) -> double & { return c.dataset.field.amplitude_scale; }));
    k.push_back(real_key("field", "width_lo_km", [](RunConfig &c) -> double & { return c.dataset.field.width_lo; }));
    k.push_back(real_key("field", "width_hi_km", [](RunConfig &c) -> double & { return c.dataset.field.width_hi; }));

    k.push_back(real_key("noise", "sigma_lo", [](RunConfig &c) -> double & { return c.dataset.noise.sigma_lo; }));
    k.push_back(real_key("noise", "sigma_hi", [](RunConfig &c) -> double & { return c.dataset.noise.sigma_hi; }));
    k.push_back(real_key("noise", "nominal_sigma", [](RunConfig &c) -> double & { return c.dataset.noise.nominal_sigma; }));

    k.push_back(real_key("mask", "ratio", [](RunConfig &c) -> double & { return c.dataset.mask.ratio; }));
    k.push_back(int_key("mask", "cluster_count", [](RunConfig &c) -> int & { return c.dataset.mask.cluster_count; }));
    k.push_back(real_key("mask", "dropout", [](RunConfig &c) -> double & { return c.dataset.mask.dropout; }));

    // name and preset are applied before everything else in parse_run_config.
    k.push_back({"solver", "name", [](RunConfig &, std::string_view, std::string const &) {},
                 [](RunConfig const &c) { return std::string(to_string(c.solver.name)); }});
    k.push_back({"solver", "preset", [](RunConfig &, std::string_view, std::string const &) {},
                 [](RunConfig const &c) { return std::string(to_string(c.preset)); }});
    k.push_back({"solver", "layout",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   try {
                     c.solver.layout = parse_layout(v);
                   } catch (std::invalid_argument const &e) {
                     throw ValidationError(ctx + ": " + e.what());
                   }
                 },
                 [](RunConfig const &c) { return std::string(to_string(c.solver.layout)); }});
    k.push_back({"solver", "sigma",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   if (v == "budget") {
                     c.solver.sigma.reset();
                   } else {
                     c.solver.sigma = parse_double(v, ctx);
                   }
                 },
                 [](RunConfig const &c) {
                   return c.solver.sigma ? format_double(*c.solver.sigma) : std::string("budget");
                 }});

    k.push_back(real_key("vr", "gamma", [](RunConfig &c) -> double & { return c.solver.relax.gamma; }));
    k.push_back(real_key("vr", "eta", [](RunConfig &c) -> double & { return c.eta; }));
    k.push_back({"vr", "eta_f",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   if (v == "spectrum") {
                     c.solver.relax.rho_factor_from_spectrum = true;
                   } else {
                     c.solver.relax.rho_factor_from_spectrum = false;
                     c.solver.relax.rho_factor = parse_double(v, ctx);
                   }
                 },
                 [](RunConfig const &c) {
                   return c.solver.relax.rho_factor_from_spectrum ? std::string("spectrum")
                                                                  : format_double(c.solver.relax.rho_factor);
                 }});
    k.push_back(int_key("vr", "schedule_period", [](RunConfig &c) -> int & { return c.solver.relax.schedule_period; }));
    k.push_back(int_key("vr", "rank_k", [](RunConfig &c) -> int & { return c.solver.relax.rank_k; }));
    k.push_back(int_key("vr", "max_iters", [](RunConfig &c) -> int & { return c.solver.relax.max_iters; }));
    k.push_back(real_key("vr", "iterate_tol", [](RunConfig &c) -> double & { return c.solver.relax.iterate_tol; }));
    k.push_back(real_key("vr", "lambda_init", [](RunConfig &c) -> double & { return c.solver.relax.lambda_init; }));
    k.push_back(real_key("vr", "newton_tol", [](RunConfig &c) -> double & { return c.solver.relax.newton_tol; }));
    k.push_back(int_key("vr", "newton_max", [](RunConfig &c) -> int & { return c.solver.relax.newton_max; }));
    k.push_back({"vr", "derivative",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   c.solver.relax.derivative = parse_derivative(v, ctx);
                 },
                 [](RunConfig const &c) { return std::string(to_string(c.solver.relax.derivative)); }});
    k.push_back(real_key("vr", "complex_step_h", [](RunConfig &c) -> double & { return c.solver.relax.complex_step_h; }));

    k.push_back(real_key("fista", "lambda", [](RunConfig &c) -> double & { return c.solver.fista.lambda_fit; }));
    k.push_back(real_key("fista", "gamma", [](RunConfig &c) -> double & { return c.solver.fista.gamma; }));
    k.push_back(real_key("fista", "alpha", [](RunConfig &c) -> double & { return c.solver.fista.step; }));
    k.push_back({"fista", "step_rule",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   if (v == "combined") {
                     c.solver.fista.step_rule = FistaStep::Combined;
                   } else if (v == "laplacian") {
                     c.solver.fista.step_rule = FistaStep::LaplacianOnly;
                   } else {
                     throw ValidationError(ctx + ": expected combined or laplacian, got '" + std::string(v) + "'");
                   }
                 },
                 [](RunConfig const &c) {
                   return std::string(c.solver.fista.step_rule == FistaStep::Combined ? "combined" : "laplacian");
                 }});
    k.push_back(int_key("fista", "max_iters", [](RunConfig &c) -> int & { return c.solver.fista.max_iters; }));
    k.push_back(real_key("fista", "iterate_tol", [](RunConfig &c) -> double & { return c.solver.fista.iterate_tol; }));

    k.push_back(real_key("lbfgs", "lambda", [](RunConfig &c) -> double & { return c.solver.lbfgs.lambda_fit; }));
    k.push_back(real_key("lbfgs", "gamma", [](RunConfig &c) -> double & { return c.solver.lbfgs.gamma; }));
    k.push_back(int_key("lbfgs", "rank_k", [](RunConfig &c) -> int & { return c.solver.lbfgs.rank_k; }));
    k.push_back(int_key("lbfgs", "memory", [](RunConfig &c) -> int & { return c.solver.lbfgs.memory; }));
    k.push_back(int_key("lbfgs", "max_iters", [](RunConfig &c) -> int & { return c.solver.lbfgs.max_iters; }));
    k.push_back(real_key("lbfgs", "grad_tol", [](RunConfig &c) -> double & { return c.solver.lbfgs.grad_tol; }));
    k.push_back(real_key("lbfgs", "iterate_tol", [](RunConfig &c) -> double & { return c.solver.lbfgs.iterate_tol; }));
    k.push_back(real_key("lbfgs", "c1", [](RunConfig &c) -> double & { return c.solver.lbfgs.c1; }));
    k.push_back(real_key("lbfgs", "c2", [](RunConfig &c) -> double & { return c.solver.lbfgs.c2; }));
    k.push_back(int_key("lbfgs", "max_line_search", [](RunConfig &c) -> int & { return c.solver.lbfgs.max_line_search; }));
    k.push_back(int_key("lbfgs", "gradient_check_every",
                        [](RunConfig &c) -> int & { return c.solver.lbfgs.gradient_check_every; }));

    k.push_back(real_key("smooth_only", "ridge", [](RunConfig &c) -> double & { return c.solver.smooth.ridge; }));
    k.push_back(real_key("smooth_only", "lambda_init", [](RunConfig &c) -> double & { return c.solver.smooth.lambda_init; }));
    k.push_back(real_key("smooth_only", "newton_tol", [](RunConfig &c) -> double & { return c.solver.smooth.newton_tol; }));
    k.push_back(int_key("smooth_only", "newton_max", [](RunConfig &c) -> int & { return c.solver.smooth.newton_max; }));
    k.push_back({"smooth_only", "derivative",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   c.solver.smooth.derivative = parse_derivative(v, ctx);
                 },
                 [](RunConfig const &c) { return std::string(to_string(c.solver.smooth.derivative)); }});

    k.push_back({"output", "format",
                 [](RunConfig &c, std::string_view v, std::string const &ctx) {
                   if (v == "csv") {
                     c.format = ReportFormat::Csv;
                   } else if (v == "json") {
                     c.format = ReportFormat::Json;
                   } else {
                     throw ValidationError(ctx + ": expected csv or json, got '" + std::string(v) + "'");
                   }
                 },
                 [](RunConfig const &c) { return std::string(c.format == ReportFormat::Csv ? "csv" : "json"); }});
    k.push_back(int_key("output", "sv_count", [](RunConfig &c) -> int & { return c.sv_count; }));
    return k;
  }();
  return table;
}

void check(bool ok, std::string const &source, std::string const &what) {
  if (!ok) throw ValidationError(source + ": " + what);
}

void validate(RunConfig const &c, std::string const &source) {
  check(c.eta > 0 && std::isfinite(c.eta), source, "vr.eta must be positive");
  try {
    c.dataset.grid.validate();
    c.dataset.field.validate(c.dataset.n_sources);
    c.dataset.noise.validate();
    c.solver.relax.validate();
    c.solver.fista.validate();
    c.solver.lbfgs.validate();
  } catch (std::invalid_argument const &e) {
    throw ValidationError(source + ": " + e.what());
  }
  auto const &d = c.dataset;
  check(d.n_sources >= 1, source, "sources.count must be positive");
  check(d.source_margin_km >= 0, source, "sources.margin_km must be nonnegative");
  check(d.mask.ratio > 0 && d.mask.ratio <= 1, source, "mask.ratio must lie in (0, 1]");
  check(d.mask.cluster_count >= 1, source, "mask.cluster_count must be positive");
  check(d.mask.dropout >= 0 && d.mask.dropout < 1, source, "mask.dropout must lie in [0, 1)");
  check(!c.solver.sigma || *c.solver.sigma >= 0, source, "solver.sigma must be nonnegative or 'budget'");
  check(c.solver.smooth.ridge > 0, source, "smooth_only.ridge must be positive");
  check(c.solver.smooth.newton_max >= 1, source, "smooth_only.newton_max must be positive");
  check(c.sv_count >= 1, source, "output.sv_count must be positive");
}

} // namespace

void RunConfig::set_seed(std::uint64_t s) {
  seed = s;
  dataset.reseed(s);
}

char const *to_string(Preset p) { return p == Preset::Reference ? "reference" : "benchmark"; }

RunConfig parse_run_config(std::string_view text, std::string_view source_name) {
  std::string const source(source_name);
  auto const entries = KeyValueText::parse(text, source_name).by_path(source_name);

  std::set<std::string> known_sections;
  for (auto const &k : keys()) known_sections.insert(k.section);
  for (auto const &[path, e] : entries) {
    std::string const ctx = source + ":" + std::to_string(e.line) + ": " + path;
    if (!known_sections.count(e.section)) throw ValidationError(ctx + ": unknown section [" + e.section + "]");
    bool found = false;
    for (auto const &k : keys()) found = found || k.path() == path;
    if (!found) throw ValidationError(ctx + ": unknown key");
  }

  auto ctx_of = [&](std::string const &path) {
    return source + ":" + std::to_string(entries.at(path).line) + ": " + path;
  };

  RunConfig c;
  SolverName name = SolverName::Vr;
  if (auto it = entries.find("solver.name"); it != entries.end()) {
    try {
      name = parse_solver_name(trim(it->second.value));
    } catch (std::invalid_argument const &e) {
      throw ValidationError(ctx_of("solver.name") + ": " + e.what());
    }
  }
  if (auto it = entries.find("solver.preset"); it != entries.end()) {
    c.preset = parse_preset(trim(it->second.value), ctx_of("solver.preset"));
  }
  c.solver = c.preset == Preset::Reference ? SolverSpec::reference(name) : SolverSpec::benchmark(name);
  c.eta = 1.0 / c.solver.relax.rho0;

  for (auto const &k : keys()) {
    auto it = entries.find(k.path());
    if (it == entries.end()) continue;
    k.set(c, trim(it->second.value), ctx_of(k.path()));
  }
  c.solver.relax.rho0 = 1.0 / c.eta;
  validate(c, source);
  return c;
}

RunConfig load_run_config(std::filesystem::path const &path) {
  return parse_run_config(read_file(path), path.string());
}

std::string format_run_config(RunConfig const &config) {
  std::string out;
  std::string section;
  for (auto const &k : keys()) {
    if (k.section != section) {
      if (!section.empty()) out += "\n";
      section = k.section;
      out += "[" + section + "]\n";
    }
    out += k.name + " = " + k.get(config) + "\n";
  }
  return out;
}

} // namespace lrsmooth
