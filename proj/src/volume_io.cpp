#include "pactomo/volume_io.hpp"

#include "pactomo/error.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace pactomo {

namespace {

using nlohmann::json;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int b = 0; b < 8; ++b) r |= ((v >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    return r;
  }
}

void put_double(std::ostream& os, double x) {
  const std::uint64_t v = to_little(std::bit_cast<std::uint64_t>(x));
  char bytes[8];
  std::memcpy(bytes, &v, 8);
  os.write(bytes, 8);
}

double get_double(std::istream& is) {
  char bytes[8];
  if (!is.read(bytes, 8)) throw IoError("read_volume: payload shorter than the sidecar declares");
  std::uint64_t v;
  std::memcpy(&v, bytes, 8);
  return std::bit_cast<double>(to_little(v));
}

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  if (stem.extension() == ".json" || stem.extension() == ".bin") stem.replace_extension();
  stem += ext;
  return stem;
}

}  // namespace

void write_volume(const std::filesystem::path& stem, const VolumeData& data) {
  const std::size_t nf = std::max<std::size_t>(1, data.frequencies.size());
  const std::size_t n = nf * data.grid.size();
  if (data.real.size() != n || (data.is_complex && data.imag.size() != n))
    throw PreconditionError("write_volume: payload size does not match grid and frequency list");

  const auto bin_path = with_ext(stem, ".bin");
  json meta;
  meta["format"] = "pactomo-volume";
  meta["version"] = 1;
  meta["endianness"] = "little";
  meta["value_type"] = data.is_complex ? "complex128" : "float64";
  meta["grid"] = {{"origin", {data.grid.origin()[0], data.grid.origin()[1], data.grid.origin()[2]}},
                  {"spacing", data.grid.spacing()},
                  {"dims", {data.grid.dims()[0], data.grid.dims()[1], data.grid.dims()[2]}}};
  meta["frequencies"] = data.frequencies;
  meta["symmetric_closure"] = data.symmetric_closure;
  meta["order"] = "frequency-major, row-major voxels (i, j, k), k fastest";
  meta["payload"] = bin_path.filename().string();

  std::ofstream js(with_ext(stem, ".json"));
  if (!js) throw IoError("write_volume: cannot open " + with_ext(stem, ".json").string());
  js << meta.dump(2) << '\n';

  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("write_volume: cannot open " + bin_path.string());
  for (std::size_t q = 0; q < n; ++q) {
    put_double(bin, data.real[q]);
    if (data.is_complex) put_double(bin, data.imag[q]);
  }
  if (!bin) throw IoError("write_volume: write failed for " + bin_path.string());
}

VolumeData read_volume(const std::filesystem::path& path) {
  const auto json_path = with_ext(path, ".json");
  std::ifstream js(json_path);
  if (!js) throw IoError("read_volume: cannot open " + json_path.string());
  json meta;
  try {
    js >> meta;
  } catch (const json::exception& e) {
    throw IoError("read_volume: malformed sidecar " + json_path.string() + ": " + e.what());
  }
  if (meta.value("format", "") != "pactomo-volume" || meta.value("endianness", "") != "little")
    throw IoError("read_volume: unsupported sidecar " + json_path.string());

  const auto& g = meta.at("grid");
  const auto o = g.at("origin").get<std::vector<double>>();
  const auto d = g.at("dims").get<std::vector<std::size_t>>();
  if (o.size() != 3 || d.size() != 3) throw IoError("read_volume: malformed grid block");
  VolumeData data{Grid3(Vec3(o[0], o[1], o[2]), g.at("spacing").get<double>(), {d[0], d[1], d[2]}),
                  meta.at("frequencies").get<std::vector<double>>(),
                  meta.value("symmetric_closure", true),
                  meta.at("value_type").get<std::string>() == "complex128",
                  {},
                  {}};

  const std::size_t n = std::max<std::size_t>(1, data.frequencies.size()) * data.grid.size();
  const auto bin_path = json_path.parent_path() / meta.at("payload").get<std::string>();
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IoError("read_volume: cannot open " + bin_path.string());
  data.real.resize(n);
  if (data.is_complex) data.imag.resize(n);
  for (std::size_t q = 0; q < n; ++q) {
    data.real[q] = get_double(bin);
    if (data.is_complex) data.imag[q] = get_double(bin);
  }
  if (bin.peek() != std::char_traits<char>::eof())
    throw IoError("read_volume: payload longer than the sidecar declares");
  return data;
}

VolumeData to_volume(const SusceptibilityField& field) {
  VolumeData v{field.grid(), field.freqs().values(), field.freqs().symmetric_closure(), true, {}, {}};
  v.real.reserve(field.values().size());
  v.imag.reserve(field.values().size());
  for (const auto& z : field.values()) {
    v.real.push_back(z.real());
    v.imag.push_back(z.imag());
  }
  return v;
}

SusceptibilityField to_susceptibility(const VolumeData& data, std::size_t boundary_width) {
  if (!data.is_complex) throw IoError("to_susceptibility: volume is not complex");
  std::vector<cplx> values(data.real.size());
  for (std::size_t q = 0; q < values.size(); ++q) values[q] = {data.real[q], data.imag[q]};
  return SusceptibilityField(data.grid, FrequencyLattice(data.frequencies, data.symmetric_closure),
                             std::move(values), boundary_width);
}

}  // namespace pactomo
