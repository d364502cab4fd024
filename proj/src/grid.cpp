#include "lrsmooth/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

void ReceiverGrid::validate() const {
  if (nx < 2 || ny < 2) throw ArgumentError("ReceiverGrid: nx and ny must be at least 2");
  if (!(spacing > 0) || !std::isfinite(spacing)) throw ArgumentError("ReceiverGrid: spacing must be positive");
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) throw ArgumentError("ReceiverGrid: origin must be finite");
}

namespace {

bool is_permutation_of_n(std::span<int const> order, int n) {
  if (static_cast<int>(order.size()) != n) return false;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int s : order) {
    if (s < 0 || s >= n || seen[static_cast<std::size_t>(s)]) return false;
    seen[static_cast<std::size_t>(s)] = 1;
  }
  return true;
}

} // namespace

SourceSet SourceSet::unordered(std::vector<double> sx, std::vector<double> sy) {
  SourceSet set;
  auto const n = sx.size();
  set.sx = std::move(sx);
  set.sy = std::move(sy);
  set.energy.assign(n, 0.0);
  set.order.resize(n);
  std::iota(set.order.begin(), set.order.end(), 0);
  return set;
}

void SourceSet::validate() const {
  auto const n = sx.size();
  if (sy.size() != n || energy.size() != n || order.size() != n) throw DimensionError("SourceSet: field lengths differ");
  for (std::size_t s = 0; s < n; ++s) {
    if (!std::isfinite(sx[s]) || !std::isfinite(sy[s])) throw ArgumentError("SourceSet: non-finite coordinate");
    if (!(energy[s] >= 0)) throw ArgumentError("SourceSet: energy must be nonnegative");
  }
  if (!is_permutation_of_n(order, static_cast<int>(n))) throw ArgumentError("SourceSet: order is not a permutation");
}

ResidualTensor::ResidualTensor(ReceiverGrid g, SourceSet s)
    : grid{g}, sources{std::move(s)}, values(grid.nx, grid.ny, sources.size(), 0.0) {}

ResidualTensor::ResidualTensor(ReceiverGrid g, SourceSet s, GridArray<double> v)
    : grid{g}, sources{std::move(s)}, values{std::move(v)} {
  if (!values.same_shape(grid.nx, grid.ny, sources.size())) throw DimensionError("ResidualTensor: shape mismatch");
  for (double x : values.data()) {
    if (!std::isfinite(x)) throw ArgumentError("ResidualTensor: non-finite entry");
  }
}

SamplingMask::SamplingMask(int nx, int ny, int ns, bool fill)
    : flags_(nx, ny, ns, fill ? 1 : 0), count_{fill ? flags_.size() : 0} {}

void SamplingMask::set(int p, int q, int s, bool on) {
  auto &f = flags_(p, q, s);
  if (f && !on) --count_;
  if (!f && on) ++count_;
  f = on ? 1 : 0;
}

char const *to_string(Layout layout) {
  return layout == Layout::ReceiverBySource ? "receiver_by_source" : "block";
}

Layout parse_layout(std::string_view name) {
  if (name == "receiver_by_source" || name == "1") return Layout::ReceiverBySource;
  if (name == "block" || name == "2") return Layout::BlockTessellated;
  throw ArgumentError("unknown matricization '" + std::string(name) + "' (expected receiver_by_source or block)");
}

IndexMap IndexMap::receiver_by_source(int nx, int ny, std::vector<int> order) {
  return block(nx, ny, std::move(order), 0, 0);
}

IndexMap IndexMap::block(int nx, int ny, std::vector<int> order, int n_bx, int n_by) {
  int const ns = static_cast<int>(order.size());
  if (nx < 1 || ny < 1 || ns < 1) throw ArgumentError("IndexMap: empty tensor");
  if (!is_permutation_of_n(order, ns)) throw ArgumentError("IndexMap: order is not a permutation of the sources");
  IndexMap m;
  m.nx_ = nx;
  m.ny_ = ny;
  if (n_bx == 0 && n_by == 0) {
    m.layout_ = Layout::ReceiverBySource;
    m.rows_ = static_cast<Index>(nx) * ny;
    m.cols_ = ns;
  } else {
    if (n_bx < 1 || n_by < 1 || n_bx * n_by != ns) {
      throw ArgumentError("IndexMap: block layout " + std::to_string(n_bx) + "x" + std::to_string(n_by) +
                          " does not hold " + std::to_string(ns) + " sources");
    }
    m.layout_ = Layout::BlockTessellated;
    m.n_bx_ = n_bx;
    m.n_by_ = n_by;
    m.rows_ = static_cast<Index>(nx) * n_bx;
    m.cols_ = static_cast<Index>(ny) * n_by;
  }
  m.position_.assign(static_cast<std::size_t>(ns), 0);
  for (int t = 0; t < ns; ++t) m.position_[static_cast<std::size_t>(order[static_cast<std::size_t>(t)])] = t;
  m.order_ = std::move(order);
  return m;
}

std::pair<Index, Index> IndexMap::to_matrix(int p, int q, int s) const {
  int const t = position_[static_cast<std::size_t>(s)];
  if (layout_ == Layout::ReceiverBySource) return {p + static_cast<Index>(nx_) * q, t};
  int const bi = t % n_bx_;
  int const bj = t / n_bx_;
  return {static_cast<Index>(bi) * nx_ + p, static_cast<Index>(bj) * ny_ + q};
}

TensorIndex IndexMap::to_tensor(Index i, Index j) const {
  if (layout_ == Layout::ReceiverBySource) {
    return {static_cast<int>(i % nx_), static_cast<int>(i / nx_), order_[static_cast<std::size_t>(j)]};
  }
  auto const bi = static_cast<int>(i / nx_);
  auto const bj = static_cast<int>(j / ny_);
  int const t = bi + n_bx_ * bj;
  return {static_cast<int>(i % nx_), static_cast<int>(j % ny_), order_[static_cast<std::size_t>(t)]};
}

SourceSet compute_source_energy(ResidualTensor const &tensor, SamplingMask const &mask) {
  auto const &v = tensor.values;
  if (!v.same_shape(mask.flags())) throw DimensionError("compute_source_energy: mask shape does not match tensor");
  SourceSet out = tensor.sources;
  int const ns = v.ns();
  out.energy.assign(static_cast<std::size_t>(ns), 0.0);
  for (int s = 0; s < ns; ++s) {
    double e = 0;
    for (int q = 0; q < v.ny(); ++q) {
      for (int p = 0; p < v.nx(); ++p) {
        if (mask(p, q, s)) e += std::abs(v(p, q, s));
      }
    }
    out.energy[static_cast<std::size_t>(s)] = e;
  }
  out.order.resize(static_cast<std::size_t>(ns));
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(), [&](int a, int b) {
    return out.energy[static_cast<std::size_t>(a)] > out.energy[static_cast<std::size_t>(b)];
  });
  return out;
}

MatricizedView matricize(ResidualTensor const &tensor, IndexMap const &map) {
  auto const &v = tensor.values;
  if (!v.same_shape(map.nx(), map.ny(), map.ns())) throw DimensionError("matricize: tensor shape does not match index map");
  MatricizedView view{map, Eigen::MatrixXd::Zero(map.rows(), map.cols()), tensor.grid, tensor.sources};
  for (int s = 0; s < v.ns(); ++s) {
    for (int q = 0; q < v.ny(); ++q) {
      for (int p = 0; p < v.nx(); ++p) {
        auto [i, j] = map.to_matrix(p, q, s);
        view.matrix(i, j) = v(p, q, s);
      }
    }
  }
  return view;
}

MatricizedView matricize_receiver_by_source(ResidualTensor const &tensor, std::span<int const> order) {
  auto map = IndexMap::receiver_by_source(tensor.values.nx(), tensor.values.ny(), {order.begin(), order.end()});
  return matricize(tensor, map);
}

MatricizedView matricize_block(ResidualTensor const &tensor, std::span<int const> order, int n_bx, int n_by) {
  if (n_bx * n_by != tensor.values.ns()) {
    throw ArgumentError("matricize_block: n_bx * n_by must equal the number of sources");
  }
  auto map = IndexMap::block(tensor.values.nx(), tensor.values.ny(), {order.begin(), order.end()}, n_bx, n_by);
  return matricize(tensor, map);
}

ResidualTensor dematricize(MatricizedView const &view) {
  auto const &map = view.map;
  if (view.matrix.rows() != map.rows() || view.matrix.cols() != map.cols()) {
    throw DimensionError("dematricize: matrix shape does not match index map");
  }
  GridArray<double> values(map.nx(), map.ny(), map.ns());
  for (Index j = 0; j < map.cols(); ++j) {
    for (Index i = 0; i < map.rows(); ++i) {
      auto const t = map.to_tensor(i, j);
      values(t.p, t.q, t.s) = view.matrix(i, j);
    }
  }
  ResidualTensor out;
  out.grid = view.grid;
  out.sources = view.sources;
  out.values = std::move(values);
  return out;
}

Eigen::MatrixXd matricize_mask(SamplingMask const &mask, IndexMap const &map) {
  if (!mask.flags().same_shape(map.nx(), map.ny(), map.ns())) throw DimensionError("matricize_mask: shape mismatch");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(map.rows(), map.cols());
  for (int s = 0; s < map.ns(); ++s) {
    for (int q = 0; q < map.ny(); ++q) {
      for (int p = 0; p < map.nx(); ++p) {
        if (mask(p, q, s)) {
          auto [i, j] = map.to_matrix(p, q, s);
          m(i, j) = 1.0;
        }
      }
    }
  }
  return m;
}

std::pair<int, int> default_block_layout(int ns) {
  if (ns < 1) throw ArgumentError("default_block_layout: need at least one source");
  int by = static_cast<int>(std::sqrt(static_cast<double>(ns)));
  while (ns % by != 0) --by;
  return {ns / by, by};
}

} // namespace lrsmooth
