#include "lrsmooth/grid_io.hpp"

#include <set>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/text_format.hpp"

namespace lrsmooth {

namespace {
constexpr std::string_view kHeader = "source_id,rx_index,ry_index,value,observed,sigma_station";

std::string join_doubles(std::vector<double> const &xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

std::vector<double> parse_doubles(std::string_view text, std::string_view context) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (auto tok : split(text, ',')) out.push_back(parse_double(tok, context));
  return out;
}
} // namespace

std::string format_tensor_csv(TensorData const &data) {
  auto const &v = data.tensor.values;
  if (!v.same_shape(data.mask.flags())) throw DimensionError("format_tensor_csv: mask shape mismatch");
  if (data.station_sigma.size() != static_cast<std::size_t>(v.nx() * v.ny())) {
    throw DimensionError("format_tensor_csv: station_sigma must have nx*ny entries");
  }
  std::string out(kHeader);
  out += '\n';
  for (int s = 0; s < v.ns(); ++s) {
    for (int p = 0; p < v.nx(); ++p) {
      for (int q = 0; q < v.ny(); ++q) {
        out += std::to_string(s + 1) + ',' + std::to_string(p + 1) + ',' + std::to_string(q + 1) + ',' +
               format_double(v(p, q, s)) + ',' + (data.mask(p, q, s) ? '1' : '0') + ',' +
               format_double(data.station_sigma[static_cast<std::size_t>(p + v.nx() * q)]) + '\n';
      }
    }
  }
  return out;
}

void write_tensor_csv(std::filesystem::path const &path, TensorData const &data) {
  write_file(path, format_tensor_csv(data));
}

TensorData parse_tensor_csv(std::string_view text, ReceiverGrid const &grid, SourceSet const &sources,
                            std::string_view source_name) {
  int const nx = grid.nx, ny = grid.ny, ns = sources.size();
  TensorData data{ResidualTensor(grid, sources), SamplingMask(nx, ny, ns),
                  std::vector<double>(static_cast<std::size_t>(nx * ny), 0.0)};
  GridArray<std::uint8_t> seen(nx, ny, ns, 0);
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kHeader) {
    throw ValidationError(std::string(source_name) + ": missing header '" + std::string(kHeader) + "'");
  }
  std::size_t rows = 0;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    auto line = trim(lines[n]);
    if (line.empty()) continue;
    auto const ctx = std::string(source_name) + ":" + std::to_string(n + 1);
    auto f = split(line, ',');
    if (f.size() != 6) throw ValidationError(ctx + ": expected 6 fields");
    auto const s = parse_int(f[0], ctx) - 1;
    auto const p = parse_int(f[1], ctx) - 1;
    auto const q = parse_int(f[2], ctx) - 1;
    if (s < 0 || s >= ns || p < 0 || p >= nx || q < 0 || q >= ny) throw ValidationError(ctx + ": index out of range");
    auto const is = static_cast<int>(s), ip = static_cast<int>(p), iq = static_cast<int>(q);
    if (seen(ip, iq, is)) throw ValidationError(ctx + ": duplicate entry");
    seen(ip, iq, is) = 1;
    double const value = parse_double(f[3], ctx);
    if (!std::isfinite(value)) throw ValidationError(ctx + ": non-finite value");
    data.tensor(ip, iq, is) = value;
    auto const obs = trim(f[4]);
    if (obs != "0" && obs != "1") throw ValidationError(ctx + ": observed must be 0 or 1");
    data.mask.set(ip, iq, is, obs == "1");
    data.station_sigma[static_cast<std::size_t>(ip + nx * iq)] = parse_double(f[5], ctx);
    ++rows;
  }
  if (rows != data.tensor.values.size()) {
    throw ValidationError(std::string(source_name) + ": expected " + std::to_string(data.tensor.values.size()) +
                          " rows, found " + std::to_string(rows));
  }
  return data;
}

TensorData read_tensor_csv(std::filesystem::path const &path, ReceiverGrid const &grid, SourceSet const &sources) {
  return parse_tensor_csv(read_file(path), grid, sources, path.string());
}

std::string format_grid_meta(ReceiverGrid const &grid, SourceSet const &sources) {
  std::string out;
  out += "nx = " + std::to_string(grid.nx) + "\n";
  out += "ny = " + std::to_string(grid.ny) + "\n";
  out += "spacing_km = " + format_double(grid.spacing) + "\n";
  out += "origin_x_km = " + format_double(grid.origin_x) + "\n";
  out += "origin_y_km = " + format_double(grid.origin_y) + "\n";
  out += "n_s = " + std::to_string(sources.size()) + "\n";
  out += "source_x_km = " + join_doubles(sources.sx) + "\n";
  out += "source_y_km = " + join_doubles(sources.sy) + "\n";
  return out;
}

void write_grid_meta(std::filesystem::path const &path, ReceiverGrid const &grid, SourceSet const &sources) {
  write_file(path, format_grid_meta(grid, sources));
}

std::pair<ReceiverGrid, SourceSet> read_grid_meta(std::filesystem::path const &path) {
  auto const name = path.string();
  auto const kv = KeyValueText::load(path).by_path(name);
  static std::set<std::string> const known{"nx", "ny", "spacing_km", "origin_x_km", "origin_y_km",
                                          "n_s", "source_x_km", "source_y_km"};
  for (auto const &[k, e] : kv) {
    if (!known.contains(k)) throw ValidationError(name + ":" + std::to_string(e.line) + ": unknown key '" + k + "'");
  }
  auto get = [&](char const *key) -> std::string const & {
    auto it = kv.find(key);
    if (it == kv.end()) throw ValidationError(name + ": missing key '" + key + "'");
    return it->second.value;
  };
  ReceiverGrid grid;
  grid.nx = static_cast<int>(parse_int(get("nx"), name + ": nx"));
  grid.ny = static_cast<int>(parse_int(get("ny"), name + ": ny"));
  grid.spacing = parse_double(get("spacing_km"), name + ": spacing_km");
  grid.origin_x = parse_double(get("origin_x_km"), name + ": origin_x_km");
  grid.origin_y = parse_double(get("origin_y_km"), name + ": origin_y_km");
  grid.validate();
  auto const ns = parse_int(get("n_s"), name + ": n_s");
  auto sx = parse_doubles(get("source_x_km"), name + ": source_x_km");
  auto sy = parse_doubles(get("source_y_km"), name + ": source_y_km");
  if (ns < 1 || static_cast<long long>(sx.size()) != ns || static_cast<long long>(sy.size()) != ns) {
    throw ValidationError(name + ": source coordinate lists must have n_s entries");
  }
  auto sources = SourceSet::unordered(std::move(sx), std::move(sy));
  sources.validate();
  return {grid, std::move(sources)};
}

} // namespace lrsmooth
