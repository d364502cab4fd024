#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lrsmooth/grid.hpp"

namespace lrsmooth {

/// Contents of one tensor CSV: values, observation flags, and the per-station
/// noise level (indexed p + nx * q; zero when unknown).
struct TensorData {
  ResidualTensor tensor;
  SamplingMask mask;
  std::vector<double> station_sigma;
};

/// CSV with header source_id,rx_index,ry_index,value,observed,sigma_station.
/// Indices are 1-based; rows sorted by (source_id, rx_index, ry_index).
std::string format_tensor_csv(TensorData const &data);
void write_tensor_csv(std::filesystem::path const &path, TensorData const &data);
/// grid and sources come from the sidecar; every (source, rx, ry) must appear once.
TensorData parse_tensor_csv(std::string_view text, ReceiverGrid const &grid, SourceSet const &sources,
                            std::string_view source_name = "<tensor>");
TensorData read_tensor_csv(std::filesystem::path const &path, ReceiverGrid const &grid, SourceSet const &sources);

/// Sidecar keys: nx, ny, spacing_km, origin_x_km, origin_y_km, n_s,
/// source_x_km, source_y_km (comma-separated, source order).
std::string format_grid_meta(ReceiverGrid const &grid, SourceSet const &sources);
void write_grid_meta(std::filesystem::path const &path, ReceiverGrid const &grid, SourceSet const &sources);
std::pair<ReceiverGrid, SourceSet> read_grid_meta(std::filesystem::path const &path);

} // namespace lrsmooth
