#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "adaptv/grid.hpp"

namespace adaptv {

struct ImageIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Header exists but cannot be parsed.
struct MalformedHeaderError : ImageIoError {
    using ImageIoError::ImageIoError;
};
/// Recognized container, unsupported flavor (e.g. color PGM/PNG).
struct UnsupportedFormatError : ImageIoError {
    using ImageIoError::ImageIoError;
};
/// Sample depth other than 8 bits.
struct UnsupportedBitDepthError : ImageIoError {
    using ImageIoError::ImageIoError;
};
/// Fewer payload bytes than the header promises.
struct TruncatedPayloadError : ImageIoError {
    using ImageIoError::ImageIoError;
};

/// Loads an 8-bit grayscale PGM (P5) or PNG; values are mapped to [0,1] by
/// dividing by 255. The format is sniffed from the file's magic bytes.
ImageGrid load_image(const std::string& path);

/// Saves as 8-bit grayscale, round(255*clamp(u,0,1)). The container is chosen
/// by file extension (.png for PNG, anything else is written as PGM P5).
void save_image(const ImageGrid& u, const std::string& path);

/// Additive Gaussian noise with a counter-based generator keyed by
/// (seed, pixel index): the result is independent of evaluation order. The
/// optional mask scales sigma per pixel.
ImageGrid add_gaussian_noise(const ImageGrid& u, double sigma, uint64_t seed,
                             const WeightMap* mask = nullptr);

/// The raw standard normal sample the noise generator produces for one pixel.
double noise_sample(uint64_t seed, uint64_t pixel_index);

}  // namespace adaptv
