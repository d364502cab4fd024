#pragma once

#include <cstdint>
#include <vector>

#include "lrsmooth/grid.hpp"

namespace lrsmooth {

/// Residual field built from shared Gaussian anomalies:
///   value(p, q, s) = sum_a C[s, a] exp(-|x_pq - center_a|^2 / (2 width_a^2))
/// with C = G1 G2^T (n_s x r times r x n_anomalies, standard normal entries),
/// rescaled so that max |value| = amplitude_scale.
struct FieldSpec {
  int n_anomalies = 12;
  int amplitude_rank = 5;
  double amplitude_scale = 1.0; // seconds
  double width_lo = 10.0;       // km
  double width_hi = 30.0;
  std::vector<double> center_x; // optional explicit centers (km) and widths;
  std::vector<double> center_y; // drawn uniformly over the grid when empty
  std::vector<double> widths;
  std::uint64_t seed = 1;

  void validate(int n_sources) const;
};

struct NoiseSpec {
  double sigma_lo = 0.03;
  double sigma_hi = 0.15;
  double nominal_sigma = 0.06;
  std::uint64_t seed = 1;

  void validate() const;
};

struct MaskSpec {
  double ratio = 0.15;
  int cluster_count = 12;
  double dropout = 0.35;
  std::uint64_t seed = 1;
};

/// Source epicenters drawn uniformly in the grid box widened by margin_km.
SourceSet generate_sources(ReceiverGrid const &grid, int n_sources, std::uint64_t seed, double margin_km = 50.0);

ResidualTensor generate_field(ReceiverGrid const &grid, SourceSet const &sources, FieldSpec const &spec);

/// Station-wise sampling: the round(ratio * nx * ny) gridpoints nearest to
/// cluster_count random centers form the station set shared by all sources;
/// each (station, source) observation is then dropped with probability
/// dropout.
SamplingMask subsample_mask(ReceiverGrid const &grid, int n_sources, MaskSpec const &spec);

struct NoisyObservations {
  GridArray<double> values;         // truth + noise where observed, 0 elsewhere
  std::vector<double> station_sigma; // indexed p + nx * q
};

/// Each station draws sigma ~ U(sigma_lo, sigma_hi) once; every observed
/// entry at that station gets independent N(0, sigma^2) noise.
NoisyObservations add_noise(ResidualTensor const &tensor, SamplingMask const &mask, NoiseSpec const &spec);

/// nominal_sigma * sqrt(n_obs).
double misfit_budget(std::size_t n_obs, double nominal_sigma);

} // namespace lrsmooth
