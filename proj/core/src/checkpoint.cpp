#include "binary.hpp"
#include "pnpmri/denoiser.hpp"

#include <fstream>
#include <sstream>

namespace pnpmri {

namespace {

constexpr std::uint8_t kCheckpointVersion = 1;

std::size_t parse_size(const std::map<std::string, std::string> &h, const std::string &key) {
  auto it = h.find(key);
  if (it == h.end()) throw FormatError("checkpoint header missing '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception &) {
    throw FormatError("checkpoint header '" + key + "' is not an integer");
  }
}

} // namespace

void write_checkpoint(std::ostream &os, const CnnArchitecture &arch, const CnnWeights &w,
                      const std::map<std::string, std::string> &extra) {
  check_weights(w, arch);
  std::map<std::string, std::string> header = extra;
  header["num_levels"] = std::to_string(arch.num_levels);
  header["base_filters"] = std::to_string(arch.base_filters);
  header["kernel_size"] = std::to_string(arch.kernel_size);
  header["convs_per_level"] = std::to_string(arch.convs_per_level);
  header["residual"] = arch.residual ? "1" : "0";
  header["in_channels"] = "2";
  header["out_channels"] = "2";
  std::ostringstream text;
  for (const auto &[k, v] : header) text << k << '=' << v << '\n';

  os.write("PNPW", 4);
  detail::write_le<std::uint8_t>(os, kCheckpointVersion);
  detail::write_block(os, text.str());
  for (const auto &layer : w.layers) {
    for (double v : layer.weight) detail::write_le<double>(os, v);
    for (double v : layer.bias) detail::write_le<double>(os, v);
  }
  if (!os) throw FormatError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream &is) {
  detail::expect_magic(is, "PNPW");
  const auto version = detail::read_le<std::uint8_t>(is);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  std::istringstream text(detail::read_block(is));
  Checkpoint ck;
  for (std::string line; std::getline(text, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("malformed checkpoint header line '" + line + "'");
    ck.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  ck.arch.num_levels = parse_size(ck.header, "num_levels");
  ck.arch.base_filters = parse_size(ck.header, "base_filters");
  ck.arch.kernel_size = parse_size(ck.header, "kernel_size");
  ck.arch.convs_per_level = parse_size(ck.header, "convs_per_level");
  ck.arch.residual = parse_size(ck.header, "residual") != 0;
  ck.weights = make_zero_weights(ck.arch);
  for (auto &layer : ck.weights.layers) {
    for (double &v : layer.weight) v = detail::read_le<double>(is);
    for (double &v : layer.bias) v = detail::read_le<double>(is);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint tensors");
  return ck;
}

void save_checkpoint(const std::string &path, const CnnArchitecture &arch, const CnnWeights &w,
                     const std::map<std::string, std::string> &extra) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_checkpoint(os, arch, w, extra);
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_checkpoint(is);
}

} // namespace pnpmri
