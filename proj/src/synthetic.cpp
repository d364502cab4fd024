#include "lrsmooth/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/numerics/rng.hpp"

namespace lrsmooth {

void FieldSpec::validate(int n_sources) const {
  if (n_anomalies < 1) throw ArgumentError("FieldSpec: n_anomalies must be positive");
  if (amplitude_rank < 1 || amplitude_rank > std::min(n_anomalies, n_sources)) {
    throw ArgumentError("FieldSpec: amplitude_rank must lie in [1, min(n_anomalies, n_s)]");
  }
  if (!(amplitude_scale >= 0)) throw ArgumentError("FieldSpec: amplitude_scale must be nonnegative");
  if (!(width_lo > 0) || !(width_hi >= width_lo)) throw ArgumentError("FieldSpec: need 0 < width_lo <= width_hi");
  auto const na = static_cast<std::size_t>(n_anomalies);
  if (!center_x.empty() && (center_x.size() != na || center_y.size() != na)) {
    throw ArgumentError("FieldSpec: explicit centers must list n_anomalies entries");
  }
  if (!widths.empty()) {
    if (widths.size() != na) throw ArgumentError("FieldSpec: explicit widths must list n_anomalies entries");
    for (double w : widths) {
      if (!(w > 0)) throw ArgumentError("FieldSpec: widths must be positive");
    }
  }
}

void NoiseSpec::validate() const {
  if (!(sigma_lo >= 0) || !(sigma_hi >= sigma_lo)) throw ArgumentError("NoiseSpec: need 0 <= sigma_lo <= sigma_hi");
  if (!(nominal_sigma >= 0)) throw ArgumentError("NoiseSpec: nominal_sigma must be nonnegative");
}

SourceSet generate_sources(ReceiverGrid const &grid, int n_sources, std::uint64_t seed, double margin_km) {
  grid.validate();
  if (n_sources < 1) throw ArgumentError("generate_sources: need at least one source");
  Rng rng(seed);
  double const x0 = grid.x(0) - margin_km, x1 = grid.x(grid.nx - 1) + margin_km;
  double const y0 = grid.y(0) - margin_km, y1 = grid.y(grid.ny - 1) + margin_km;
  std::vector<double> sx, sy;
  for (int s = 0; s < n_sources; ++s) {
    sx.push_back(rng.uniform(x0, x1));
    sy.push_back(rng.uniform(y0, y1));
  }
  return SourceSet::unordered(std::move(sx), std::move(sy));
}

ResidualTensor generate_field(ReceiverGrid const &grid, SourceSet const &sources, FieldSpec const &spec) {
  grid.validate();
  int const ns = sources.size();
  spec.validate(ns);
  int const na = spec.n_anomalies, r = spec.amplitude_rank;
  Rng rng(spec.seed);

  std::vector<double> cx = spec.center_x, cy = spec.center_y, width = spec.widths;
  if (cx.empty()) {
    for (int a = 0; a < na; ++a) {
      cx.push_back(rng.uniform(grid.x(0), grid.x(grid.nx - 1)));
      cy.push_back(rng.uniform(grid.y(0), grid.y(grid.ny - 1)));
    }
  }
  if (width.empty()) {
    for (int a = 0; a < na; ++a) {
      width.push_back(spec.width_hi > spec.width_lo ? rng.uniform(spec.width_lo, spec.width_hi) : spec.width_lo);
    }
  }
  Eigen::MatrixXd G1(ns, r), G2(na, r);
  for (Index i = 0; i < G1.size(); ++i) G1.data()[i] = rng.gaussian(0, 1);
  for (Index i = 0; i < G2.size(); ++i) G2.data()[i] = rng.gaussian(0, 1);
  Eigen::MatrixXd const C = G1 * G2.transpose();

  ResidualTensor out(grid, sources);
  double peak = 0;
  for (int s = 0; s < ns; ++s) {
    for (int q = 0; q < grid.ny; ++q) {
      for (int p = 0; p < grid.nx; ++p) {
        double v = 0;
        for (int a = 0; a < na; ++a) {
          double const dx = grid.x(p) - cx[static_cast<std::size_t>(a)];
          double const dy = grid.y(q) - cy[static_cast<std::size_t>(a)];
          double const w = width[static_cast<std::size_t>(a)];
          v += C(s, a) * std::exp(-(dx * dx + dy * dy) / (2 * w * w));
        }
        out(p, q, s) = v;
        peak = std::max(peak, std::abs(v));
      }
    }
  }
  double const scale = peak > 0 ? spec.amplitude_scale / peak : 0.0;
  for (double &v : out.values.data()) v *= scale;
  return out;
}

SamplingMask subsample_mask(ReceiverGrid const &grid, int n_sources, MaskSpec const &spec) {
  grid.validate();
  if (!(spec.ratio > 0 && spec.ratio <= 1)) throw ArgumentError("subsample_mask: ratio must lie in (0, 1]");
  if (spec.cluster_count < 1) throw ArgumentError("subsample_mask: cluster_count must be positive");
  if (!(spec.dropout >= 0 && spec.dropout < 1)) throw ArgumentError("subsample_mask: dropout must lie in [0, 1)");
  int const points = grid.points();
  auto const stations = static_cast<int>(std::lround(spec.ratio * points));
  if (stations < 1) throw ArgumentError("subsample_mask: ratio selects no stations");

  Rng rng(spec.seed);
  std::vector<double> ccx, ccy;
  for (int c = 0; c < spec.cluster_count; ++c) {
    ccx.push_back(rng.uniform(0.0, grid.nx - 1.0));
    ccy.push_back(rng.uniform(0.0, grid.ny - 1.0));
  }
  std::vector<double> dist(static_cast<std::size_t>(points));
  for (int q = 0; q < grid.ny; ++q) {
    for (int p = 0; p < grid.nx; ++p) {
      double best = std::numeric_limits<double>::infinity();
      for (int c = 0; c < spec.cluster_count; ++c) {
        double const dx = p - ccx[static_cast<std::size_t>(c)], dy = q - ccy[static_cast<std::size_t>(c)];
        best = std::min(best, dx * dx + dy * dy);
      }
      dist[static_cast<std::size_t>(p + grid.nx * q)] = best;
    }
  }
  std::vector<int> idx(static_cast<std::size_t>(points));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)]; });
  std::vector<char> chosen(static_cast<std::size_t>(points), 0);
  for (int i = 0; i < stations; ++i) chosen[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = 1;

  SamplingMask mask(grid.nx, grid.ny, n_sources);
  for (int s = 0; s < n_sources; ++s) {
    for (int k = 0; k < points; ++k) {
      if (!chosen[static_cast<std::size_t>(k)]) continue;
      bool const keep = spec.dropout == 0 || rng.uniform01() >= spec.dropout;
      if (keep) mask.set(k % grid.nx, k / grid.nx, s, true);
    }
  }
  return mask;
}

NoisyObservations add_noise(ResidualTensor const &tensor, SamplingMask const &mask, NoiseSpec const &spec) {
  spec.validate();
  auto const &v = tensor.values;
  if (!v.same_shape(mask.flags())) throw DimensionError("add_noise: mask shape does not match tensor");
  Rng rng(spec.seed);
  NoisyObservations out{GridArray<double>(v.nx(), v.ny(), v.ns(), 0.0), {}};
  out.station_sigma.resize(static_cast<std::size_t>(v.nx() * v.ny()));
  for (auto &sig : out.station_sigma) {
    sig = spec.sigma_hi > spec.sigma_lo ? rng.uniform(spec.sigma_lo, spec.sigma_hi) : spec.sigma_lo;
  }
  for (int s = 0; s < v.ns(); ++s) {
    for (int q = 0; q < v.ny(); ++q) {
      for (int p = 0; p < v.nx(); ++p) {
        if (!mask(p, q, s)) continue;
        double const sig = out.station_sigma[static_cast<std::size_t>(p + v.nx() * q)];
        out.values(p, q, s) = v(p, q, s) + rng.gaussian(0.0, sig);
      }
    }
  }
  return out;
}

double misfit_budget(std::size_t n_obs, double nominal_sigma) {
  if (n_obs < 1) throw ArgumentError("misfit_budget: need at least one observation");
  if (!(nominal_sigma >= 0)) throw ArgumentError("misfit_budget: nominal_sigma must be nonnegative");
  return nominal_sigma * std::sqrt(static_cast<double>(n_obs));
}

} // namespace lrsmooth
