#pragma once

// Binary containers for k-space data (PNPK) and images (PNPI).
//
// Both start with a 4-byte magic, a version byte and a UTF-8 JSON header
// prefixed by its little-endian u32 length. PNPK then stores the sampling
// mask as packed bits (row-major, most significant bit first) followed by the
// samples; PNPI stores the samples directly. Samples are interleaved
// little-endian float32 (real, imaginary) pairs, coil-outermost, row-major.

#include "pnpmri/types.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

namespace pnpmri {

using Json = nlohmann::ordered_json;

inline constexpr std::uint8_t kFileVersion = 1;

struct KSpaceFile {
  KSpaceData data;
  Json header;
};

struct ImageFile {
  Image image;
  Json header;
};

/// `extra` fields are appended to the header after the structural fields.
void write_kspace(std::ostream &os, const KSpaceData &d, const Json &extra = Json::object());
KSpaceFile read_kspace(std::istream &is);
void save_kspace(const std::string &path, const KSpaceData &d, const Json &extra = Json::object());
KSpaceFile load_kspace(const std::string &path);

void write_image(std::ostream &os, const Image &x, const Json &extra = Json::object());
ImageFile read_image(std::istream &is);
void save_image(const std::string &path, const Image &x, const Json &extra = Json::object());
ImageFile load_image(const std::string &path);

/// Sensitivity maps ride in a PNPK container with a full mask and
/// "content": "sensitivity-maps"; loading renormalizes each support pixel.
void save_maps(const std::string &path, const SensitivityMaps &maps);
SensitivityMaps load_maps(const std::string &path);

/// Rebuilds a mask from the header's "mask" object and its packed bits.
SamplingMask mask_from_header(const Json &mask_json, std::size_t rows, std::size_t cols,
                              std::vector<std::uint8_t> kept);
Json mask_to_json(const SamplingMask &mask);

} // namespace pnpmri
