#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lrsmooth {

using Eigen::Index;

/// Uniform receiver grid. Gridpoint (p, q), zero-based here, sits at
/// (origin_x + p * spacing, origin_y + q * spacing) kilometers.
struct ReceiverGrid {
  int nx = 20;
  int ny = 20;
  double spacing = 5.0;
  double origin_x = 70.0;
  double origin_y = 70.0;

  void validate() const;
  int points() const { return nx * ny; }
  double x(int p) const { return origin_x + p * spacing; }
  double y(int q) const { return origin_y + q * spacing; }
};

struct SourceSet {
  std::vector<double> sx; // km
  std::vector<double> sy;
  std::vector<double> energy;
  std::vector<int> order; // order[t] = source index at energy rank t, descending

  int size() const { return static_cast<int>(sx.size()); }
  void validate() const;
  static SourceSet unordered(std::vector<double> sx, std::vector<double> sy);
};

/// Dense (nx, ny, n_s) array, p fastest.
template <class T>
class GridArray {
 public:
  GridArray() = default;
  GridArray(int nx, int ny, int ns, T fill = T{})
      : nx_{nx}, ny_{ny}, ns_{ns}, data_(static_cast<std::size_t>(nx) * ny * ns, fill) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ns() const { return ns_; }
  std::size_t size() const { return data_.size(); }

  std::size_t offset(int p, int q, int s) const {
    return static_cast<std::size_t>(p) + static_cast<std::size_t>(nx_) * (q + static_cast<std::size_t>(ny_) * s);
  }
  T &operator()(int p, int q, int s) { return data_[offset(p, q, s)]; }
  T const &operator()(int p, int q, int s) const { return data_[offset(p, q, s)]; }

  std::span<T> data() { return data_; }
  std::span<T const> data() const { return data_; }

  bool same_shape(int nx, int ny, int ns) const { return nx_ == nx && ny_ == ny && ns_ == ns; }
  template <class U>
  bool same_shape(GridArray<U> const &o) const {
    return same_shape(o.nx(), o.ny(), o.ns());
  }
  bool operator==(GridArray const &) const = default;

 private:
  int nx_ = 0, ny_ = 0, ns_ = 0;
  std::vector<T> data_;
};

struct ResidualTensor {
  ReceiverGrid grid;
  SourceSet sources;
  GridArray<double> values; // seconds

  ResidualTensor() = default;
  ResidualTensor(ReceiverGrid g, SourceSet s);
  ResidualTensor(ReceiverGrid g, SourceSet s, GridArray<double> v);

  double &operator()(int p, int q, int s) { return values(p, q, s); }
  double operator()(int p, int q, int s) const { return values(p, q, s); }
};

class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(int nx, int ny, int ns, bool fill = false);

  bool operator()(int p, int q, int s) const { return flags_(p, q, s) != 0; }
  void set(int p, int q, int s, bool on);
  std::size_t count() const { return count_; }
  GridArray<std::uint8_t> const &flags() const { return flags_; }
  int nx() const { return flags_.nx(); }
  int ny() const { return flags_.ny(); }
  int ns() const { return flags_.ns(); }
  bool operator==(SamplingMask const &) const = default;

 private:
  GridArray<std::uint8_t> flags_;
  std::size_t count_ = 0;
};

enum class Layout { ReceiverBySource, BlockTessellated };

char const *to_string(Layout layout);
Layout parse_layout(std::string_view name);

struct TensorIndex {
  int p, q, s;
  bool operator==(TensorIndex const &) const = default;
};

/// Bijection between tensor indices (p, q, s) and matrix indices (i, j) of
/// one matricization. Linear matrix indices are column-major.
///
/// ReceiverBySource: row = p + nx * q, column = energy rank of s.
/// BlockTessellated: energy rank t fills the n_bx x n_by source layout
/// column-major, cell (t % n_bx, t / n_bx); inside a block, row = p, col = q.
class IndexMap {
 public:
  IndexMap() = default;
  static IndexMap receiver_by_source(int nx, int ny, std::vector<int> order);
  static IndexMap block(int nx, int ny, std::vector<int> order, int n_bx, int n_by);

  Layout layout() const { return layout_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int ns() const { return static_cast<int>(order_.size()); }
  int n_bx() const { return n_bx_; }
  int n_by() const { return n_by_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }
  std::vector<int> const &order() const { return order_; }

  std::pair<Index, Index> to_matrix(int p, int q, int s) const;
  TensorIndex to_tensor(Index i, Index j) const;
  Index linear(int p, int q, int s) const {
    auto [i, j] = to_matrix(p, q, s);
    return i + j * rows_;
  }
  TensorIndex from_linear(Index k) const { return to_tensor(k % rows_, k / rows_); }

  bool operator==(IndexMap const &) const = default;

 private:
  Layout layout_ = Layout::ReceiverBySource;
  int nx_ = 0, ny_ = 0, n_bx_ = 1, n_by_ = 1;
  Index rows_ = 0, cols_ = 0;
  std::vector<int> order_;    // rank -> source
  std::vector<int> position_; // source -> rank
};

struct MatricizedView {
  IndexMap map;
  Eigen::MatrixXd matrix;
  ReceiverGrid grid;
  SourceSet sources;
};

/// energy[s] = sum of |value| over observed entries of source s; order sorts
/// energy descending, ties by ascending source index.
SourceSet compute_source_energy(ResidualTensor const &tensor, SamplingMask const &mask);

MatricizedView matricize_receiver_by_source(ResidualTensor const &tensor, std::span<int const> order);
MatricizedView matricize_block(ResidualTensor const &tensor, std::span<int const> order, int n_bx, int n_by);
MatricizedView matricize(ResidualTensor const &tensor, IndexMap const &map);
ResidualTensor dematricize(MatricizedView const &view);

/// Matrix with 1 at observed entries.
Eigen::MatrixXd matricize_mask(SamplingMask const &mask, IndexMap const &map);

/// Near-square n_bx x n_by factorization of n_s with n_bx >= n_by.
std::pair<int, int> default_block_layout(int ns);

} // namespace lrsmooth
