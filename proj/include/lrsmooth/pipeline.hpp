#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrsmooth/baselines.hpp"
#include "lrsmooth/grid.hpp"
#include "lrsmooth/relaxation.hpp"
#include "lrsmooth/synthetic.hpp"

namespace lrsmooth {

struct DatasetSpec {
  ReceiverGrid grid;
  int n_sources = 64;
  double source_margin_km = 50.0;
  std::uint64_t source_seed = 1;
  FieldSpec field;
  MaskSpec mask;
  NoiseSpec noise;

  /// Sets every component seed from one master seed.
  void reseed(std::uint64_t seed);
};

struct Dataset {
  ReceiverGrid grid;
  SourceSet sources;
  GridArray<double> truth;
  SamplingMask mask;
  GridArray<double> observed; // truth + noise at observed entries, 0 elsewhere
  std::vector<double> station_sigma;
  double sigma_budget = 0;    // nominal_sigma * sqrt(n_obs)
  double true_misfit = 0;     // ||b - A(X_true)||
};

Dataset generate_dataset(DatasetSpec const &spec);

/// The matricization of the observed data and its operators. Sources are
/// ordered by the energy of the observed residuals.
struct Setup {
  IndexMap map;
  Problem problem;
};

Setup make_setup(ReceiverGrid const &grid, SourceSet const &sources, GridArray<double> const &observed,
                 SamplingMask const &mask, Layout layout);

/// Tensor view of a matrix in the given matricization.
GridArray<double> to_tensor(Eigen::MatrixXd const &W, IndexMap const &map);

enum class SolverName { Vr, VrExact, Fista, Lbfgs, SmoothOnly, LowrankOnly };

char const *to_string(SolverName name);
SolverName parse_solver_name(std::string_view name);

/// A solver and every hyperparameter it reads. sigma unset means the
/// dataset's misfit budget.
struct SolverSpec {
  SolverName name = SolverName::Vr;
  Layout layout = Layout::BlockTessellated;
  std::optional<double> sigma;
  RelaxConfig relax;
  FistaConfig fista;
  LbfgsConfig lbfgs;
  SmoothOnlyConfig smooth;

  /// Reference hyperparameters for this solver (block layout, tiny gamma).
  static SolverSpec reference(SolverName name);
  /// Hyperparameters used for the bundled synthetic benchmark.
  static SolverSpec benchmark(SolverName name);

  int schedule_period() const;
};

SolveResult run_solver(Setup const &setup, SolverSpec const &spec, double sigma_budget);

} // namespace lrsmooth
