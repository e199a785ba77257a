#include "adaptv/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <png.h>

namespace adaptv {

namespace {

// ---- PGM (P5) ----

int pgm_read_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {  // comment to end of line
            while (c != EOF && c != '\n') c = in.get();
            c = in.get();
            continue;
        }
        if (!std::isspace(c)) break;
        c = in.get();
    }
    if (c == EOF) return EOF;
    while (c != EOF && !std::isspace(c) && c != '#') {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    if (c != EOF) in.unget();  // leave the terminator (whitespace or '#') in the stream
    return 0;
}

ImageGrid load_pgm(std::istream& in) {
    std::string tok;
    if (pgm_read_token(in, tok) == EOF) throw MalformedHeaderError("pgm: empty file");
    if (tok == "P6" || tok == "P3") throw UnsupportedFormatError("pgm: color PPM is not supported");
    if (tok == "P2") throw UnsupportedFormatError("pgm: ASCII PGM is not supported");
    if (tok != "P5") throw MalformedHeaderError("pgm: missing P5 magic");

    long w = 0, h = 0, maxval = 0;
    auto parse_long = [&](long& out, const char* what) {
        if (pgm_read_token(in, tok) == EOF) throw MalformedHeaderError(std::string("pgm: missing ") + what);
        char* end = nullptr;
        out = std::strtol(tok.c_str(), &end, 10);
        if (end == tok.c_str() || *end != '\0' || out <= 0)
            throw MalformedHeaderError(std::string("pgm: bad ") + what);
    };
    parse_long(w, "width");
    parse_long(h, "height");
    parse_long(maxval, "maxval");
    if (maxval > 255) throw UnsupportedBitDepthError("pgm: 16-bit samples are not supported");
    if (maxval != 255) throw UnsupportedBitDepthError("pgm: maxval must be 255");

    // exactly one whitespace byte separates the header from the payload
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) throw MalformedHeaderError("pgm: missing header separator");

    std::vector<unsigned char> bytes(static_cast<size_t>(w) * static_cast<size_t>(h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<size_t>(in.gcount()) != bytes.size())
        throw TruncatedPayloadError("pgm: payload shorter than width*height");

    ImageGrid img(static_cast<int>(h), static_cast<int>(w));
    for (size_t k = 0; k < bytes.size(); ++k) img.values[k] = bytes[k] / 255.0;
    return img;
}

void save_pgm(const ImageGrid& u, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageIoError("cannot open for writing: " + path);
    out << "P5\n" << u.width << " " << u.height << "\n255\n";
    std::vector<unsigned char> bytes(u.values.size());
    for (size_t k = 0; k < u.values.size(); ++k) {
        const double v = std::clamp(u.values[k], 0.0, 1.0);
        bytes[k] = static_cast<unsigned char>(std::lround(255.0 * v));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageIoError("write failed: " + path);
}

// ---- PNG (8-bit grayscale) via libpng ----

struct PngReadCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngReadCloser() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (f) std::fclose(f);
    }
};

ImageGrid load_png(const std::string& path) {
    PngReadCloser ctx;
    ctx.f = std::fopen(path.c_str(), "rb");
    if (!ctx.f) throw ImageIoError("cannot open: " + path);
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw ImageIoError("png: allocation failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw ImageIoError("png: allocation failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw MalformedHeaderError("png: decode error in " + path);

    png_init_io(ctx.png, ctx.f);
    png_read_info(ctx.png, ctx.info);

    const png_uint_32 w = png_get_image_width(ctx.png, ctx.info);
    const png_uint_32 h = png_get_image_height(ctx.png, ctx.info);
    const int depth = png_get_bit_depth(ctx.png, ctx.info);
    const int color = png_get_color_type(ctx.png, ctx.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw UnsupportedFormatError("png: only grayscale images are supported");
    if (depth > 8) throw UnsupportedBitDepthError("png: only 8-bit samples are supported");
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    ImageGrid img(static_cast<int>(h), static_cast<int>(w));
    std::vector<unsigned char> row(w);
    for (png_uint_32 i = 0; i < h; ++i) {
        png_read_row(ctx.png, row.data(), nullptr);
        for (png_uint_32 j = 0; j < w; ++j)
            img.values[static_cast<size_t>(i) * w + j] = row[j] / 255.0;
    }
    png_read_end(ctx.png, nullptr);
    return img;
}

struct PngWriteCloser {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* f = nullptr;
    ~PngWriteCloser() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (f) std::fclose(f);
    }
};

void save_png(const ImageGrid& u, const std::string& path) {
    PngWriteCloser ctx;
    ctx.f = std::fopen(path.c_str(), "wb");
    if (!ctx.f) throw ImageIoError("cannot open for writing: " + path);
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw ImageIoError("png: allocation failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw ImageIoError("png: allocation failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw ImageIoError("png: encode error for " + path);

    png_init_io(ctx.png, ctx.f);
    png_set_IHDR(ctx.png, ctx.info, u.width, u.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<unsigned char> row(u.width);
    for (int i = 0; i < u.height; ++i) {
        for (int j = 0; j < u.width; ++j) {
            const double v = std::clamp(u.at(i, j), 0.0, 1.0);
            row[j] = static_cast<unsigned char>(std::lround(255.0 * v));
        }
        png_write_row(ctx.png, row.data());
    }
    png_write_end(ctx.png, nullptr);
}

bool has_png_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open: " + path);
    unsigned char magic[8] = {0};
    in.read(reinterpret_cast<char*>(magic), 8);
    static const unsigned char kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return in.gcount() == 8 && std::memcmp(magic, kPng, 8) == 0;
}

}  // namespace

ImageGrid load_image(const std::string& path) {
    if (has_png_magic(path)) return load_png(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageIoError("cannot open: " + path);
    return load_pgm(in);
}

void save_image(const ImageGrid& u, const std::string& path) {
    const bool png = path.size() >= 4 && path.compare(path.size() - 4, 4, ".png") == 0;
    if (png)
        save_png(u, path);
    else
        save_pgm(u, path);
}

namespace {

inline uint64_t splitmix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double to_unit(uint64_t bits) {
    // (0,1]: avoids log(0) in Box-Muller
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

double noise_sample(uint64_t seed, uint64_t pixel_index) {
    const uint64_t key = splitmix64(seed * 0x9e3779b97f4a7c15ULL ^ pixel_index);
    const uint64_t a = splitmix64(key);
    const uint64_t b = splitmix64(key ^ 0xda3e39cb94b95bdbULL);
    const double u1 = to_unit(a);
    const double u2 = to_unit(b);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

ImageGrid add_gaussian_noise(const ImageGrid& u, double sigma, uint64_t seed, const WeightMap* mask) {
    if (sigma < 0.0) throw std::domain_error("add_gaussian_noise: sigma must be >= 0");
    if (mask && !mask->same_dims(u)) throw std::invalid_argument("add_gaussian_noise: mask dims mismatch");
    ImageGrid out = u;
    if (sigma == 0.0) return out;
    for (size_t k = 0; k < out.values.size(); ++k) {
        const double s = mask ? sigma * mask->values[k] : sigma;
        out.values[k] += s * noise_sample(seed, k);
    }
    return out;
}

}  // namespace adaptv
