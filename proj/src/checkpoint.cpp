#include "sdsra/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sdsra/errors.hpp"

namespace sdsra {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

std::string describe(const ParamDesc& d) {
  std::string s = d.name;
  for (auto dim : d.shape) s += " " + std::to_string(dim);
  return s;
}

}  // namespace

void save_params(const ParamVector& params, std::ostream& out) {
  out << kCheckpointMagic << '\n';
  for (const auto& d : params.layout()) out << describe(d) << '\n';
  out << "payload " << params.size() << '\n';
  for (double v : params.values()) {
    const auto bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char buf[8];
    std::memcpy(buf, &bits, 8);
    out.write(buf, 8);
  }
  if (!out) throw CheckpointError("save_params: write failed");
}

void load_params(ParamVector& params, std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic)
    throw CheckpointError("load_params: missing '" + std::string(kCheckpointMagic) + "' header");

  std::vector<std::string> stored;
  std::size_t count = 0;
  bool have_payload = false;
  while (std::getline(in, line)) {
    if (line.rfind("payload ", 0) == 0) {
      std::istringstream field(line.substr(8));
      if (!(field >> count) || !(field >> std::ws).eof())
        throw CheckpointError("load_params: corrupted length field '" + line + "'");
      have_payload = true;
      break;
    }
    stored.push_back(line);
  }
  if (!have_payload) throw CheckpointError("load_params: truncated descriptor table");

  const auto& layout = params.layout();
  bool layout_ok = stored.size() == layout.size();
  for (std::size_t i = 0; layout_ok && i < stored.size(); ++i) layout_ok = stored[i] == describe(layout[i]);
  if (!layout_ok)
    throw CheckpointError("load_params: version error, stored array layout does not match the target network");
  if (count != params.size())
    throw CheckpointError("load_params: corrupted length field, payload " + std::to_string(count) +
                          " != layout " + std::to_string(params.size()));

  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    char buf[8];
    if (!in.read(buf, 8)) throw CheckpointError("load_params: payload truncated");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    values[i] = std::bit_cast<double>(to_little_endian(bits));
    if (!std::isfinite(values[i])) throw CheckpointError("load_params: non-finite value in payload");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw CheckpointError("load_params: trailing bytes after payload");

  std::copy(values.begin(), values.end(), params.values().begin());
}

void save_params_file(const ParamVector& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  save_params(params, out);
}

void load_params_file(ParamVector& params, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  load_params(params, in);
}

}  // namespace sdsra
