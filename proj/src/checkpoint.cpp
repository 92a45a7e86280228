#include "vpl/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "vpl/error.hpp"

namespace vpl {

namespace {

constexpr std::array<char, 8> kMagic{'V', 'P', 'L', 'C', 'K', 'P', 'T', '\0'};

template <class T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw FormatError("checkpoint truncated");
  return value;
}

void write_array(std::ostream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
}

std::vector<double> read_array(std::istream& in, std::size_t count) {
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw FormatError("checkpoint truncated");
  return values;
}

}  // namespace

void save_checkpoint(const SystemState& state, std::ostream& out) {
  const auto& g = state.grid();
  nlohmann::json header = {
      {"format", "vpl-checkpoint"},
      {"grid",
       {{"dim_x", g.x.dim()},
        {"n_x", g.x.n()},
        {"length", g.x.length()},
        {"n_v", g.v.n()},
        {"cutoff", g.v.cutoff()}}},
      {"time", state.time()},
      {"step", state.step()},
      {"arrays",
       nlohmann::json::array({{{"name", "f_plus"}, {"size", g.size()}},
                              {{"name", "f_minus"}, {"size", g.size()}},
                              {{"name", "phi"}, {"size", g.x.size()}}})},
  };
  const std::string text = header.dump();
  out.write(kMagic.data(), kMagic.size());
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  // The JSON time is for reading by eye; this copy is the exact one.
  write_pod(out, state.time());
  write_array(out, state.f_plus().span());
  write_array(out, state.f_minus().span());
  write_array(out, state.phi().span());
  if (!out) throw FormatError("checkpoint write failed");
}

SystemState load_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a checkpoint file");
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto length = read_pod<std::uint64_t>(in);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw FormatError("checkpoint truncated");
  const auto header = nlohmann::json::parse(text);
  const auto& gj = header.at("grid");
  const PhaseGrid grid{SpatialGrid(gj.at("dim_x").get<int>(), gj.at("n_x").get<int>(), gj.at("length").get<double>()),
                       VelocityGrid(gj.at("n_v").get<int>(), gj.at("cutoff").get<double>())};
  const double time = read_pod<double>(in);
  SpeciesPair f{PhaseField(read_array(in, grid.size())), PhaseField(read_array(in, grid.size()))};
  const auto stored_phi = read_array(in, grid.x.size());
  SystemState state(grid, std::move(f), time, header.at("step").get<std::uint64_t>());
  if (stored_phi != state.phi().values()) throw FormatError("checkpoint potential is inconsistent with densities");
  return state;
}

void save_checkpoint(const SystemState& state, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  save_checkpoint(state, out);
}

SystemState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace vpl
