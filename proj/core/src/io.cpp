#include "pnpmri/io.hpp"

#include "binary.hpp"

#include <fstream>

namespace pnpmri {

namespace {

void write_header(std::ostream &os, const char *magic, const Json &header) {
  os.write(magic, 4);
  detail::write_le<std::uint8_t>(os, kFileVersion);
  detail::write_block(os, header.dump());
}

Json read_header(std::istream &is, const char (&magic)[5]) {
  detail::expect_magic(is, magic);
  const auto version = detail::read_le<std::uint8_t>(is);
  if (version != kFileVersion) throw FormatError("unsupported file version " + std::to_string(version));
  try {
    return Json::parse(detail::read_block(is));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed JSON header: ") + e.what());
  }
}

std::size_t header_size(const Json &h, const char *key) {
  if (!h.contains(key) || !h[key].is_number_unsigned()) {
    throw FormatError(std::string("header field '") + key + "' missing or not a nonnegative integer");
  }
  return h[key].get<std::size_t>();
}

void write_samples(std::ostream &os, std::span<const Complex> values) {
  for (const auto &v : values) {
    detail::write_le<float>(os, static_cast<float>(v.real()));
    detail::write_le<float>(os, static_cast<float>(v.imag()));
  }
}

std::vector<Complex> read_samples(std::istream &is, std::size_t n) {
  std::vector<Complex> out(n);
  for (auto &v : out) {
    const float re = detail::read_le<float>(is);
    const float im = detail::read_le<float>(is);
    v = Complex(re, im);
  }
  return out;
}

void expect_eof(std::istream &is) {
  if (is.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after samples");
}

Json merge(Json base, const Json &extra) {
  for (const auto &[k, v] : extra.items()) {
    if (!base.contains(k)) base[k] = v;
  }
  return base;
}

} // namespace

Json mask_to_json(const SamplingMask &mask) {
  Json m;
  m["pattern"] = to_string(mask.pattern_kind());
  m["accel_rows"] = mask.accel_rows();
  m["accel_cols"] = mask.accel_cols();
  m["acs_rows"] = mask.acs_rows();
  m["acs_cols"] = mask.acs_cols();
  m["description"] = mask.describe();
  m["acceleration"] = mask.acceleration();
  return m;
}

SamplingMask mask_from_header(const Json &m, std::size_t rows, std::size_t cols, std::vector<std::uint8_t> kept) {
  if (!m.is_object()) throw FormatError("header 'mask' is not an object");
  return SamplingMask(rows, cols, std::move(kept), header_size(m, "acs_rows"), header_size(m, "acs_cols"),
                      pattern_kind_from_string(m.value("pattern", "full")), header_size(m, "accel_rows"),
                      header_size(m, "accel_cols"));
}

void write_kspace(std::ostream &os, const KSpaceData &d, const Json &extra) {
  Json h;
  h["schema_version"] = 1;
  h["rows"] = d.rows();
  h["cols"] = d.cols();
  h["coils"] = d.num_coils();
  h["mask"] = mask_to_json(d.mask());
  write_header(os, "PNPK", merge(h, extra));

  const auto bits = d.mask().bits();
  std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) packed[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  os.write(reinterpret_cast<const char *>(packed.data()), static_cast<std::streamsize>(packed.size()));
  write_samples(os, d.samples().values());
  if (!os) throw FormatError("failed writing k-space data");
}

KSpaceFile read_kspace(std::istream &is) {
  KSpaceFile f;
  f.header = read_header(is, "PNPK");
  const std::size_t rows = header_size(f.header, "rows");
  const std::size_t cols = header_size(f.header, "cols");
  const std::size_t coils = header_size(f.header, "coils");
  if (rows == 0 || cols == 0 || coils == 0) throw FormatError("k-space header has an empty dimension");
  if (!f.header.contains("mask")) throw FormatError("k-space header missing 'mask'");

  std::vector<std::uint8_t> packed((rows * cols + 7) / 8);
  if (!is.read(reinterpret_cast<char *>(packed.data()), static_cast<std::streamsize>(packed.size()))) {
    throw FormatError("truncated mask bits");
  }
  std::vector<std::uint8_t> kept(rows * cols);
  for (std::size_t i = 0; i < kept.size(); ++i) kept[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
  SamplingMask mask = mask_from_header(f.header["mask"], rows, cols, std::move(kept));
  CoilArray samples(coils, rows, cols, read_samples(is, coils * rows * cols));
  expect_eof(is);
  f.data = KSpaceData(std::move(samples), std::move(mask));
  return f;
}

void save_kspace(const std::string &path, const KSpaceData &d, const Json &extra) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_kspace(os, d, extra);
}

KSpaceFile load_kspace(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_kspace(is);
}

void write_image(std::ostream &os, const Image &x, const Json &extra) {
  Json h;
  h["schema_version"] = 1;
  h["rows"] = x.rows();
  h["cols"] = x.cols();
  write_header(os, "PNPI", merge(h, extra));
  write_samples(os, x.values());
  if (!os) throw FormatError("failed writing image");
}

ImageFile read_image(std::istream &is) {
  ImageFile f;
  f.header = read_header(is, "PNPI");
  const std::size_t rows = header_size(f.header, "rows");
  const std::size_t cols = header_size(f.header, "cols");
  f.image = Image(rows, cols, read_samples(is, rows * cols));
  expect_eof(is);
  return f;
}

void save_image(const std::string &path, const Image &x, const Json &extra) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_image(os, x, extra);
}

ImageFile load_image(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_image(is);
}

void save_maps(const std::string &path, const SensitivityMaps &maps) {
  const SamplingMask full = SamplingMask::full(maps.rows(), maps.cols());
  Json extra;
  extra["content"] = "sensitivity-maps";
  save_kspace(path, KSpaceData(maps.values(), full), extra);
}

SensitivityMaps load_maps(const std::string &path) {
  const KSpaceFile f = load_kspace(path);
  if (f.header.value("content", "") != "sensitivity-maps") {
    throw FormatError("'" + path + "' does not hold sensitivity maps");
  }
  return SensitivityMaps::normalize(f.data.samples());
}

} // namespace pnpmri
