#include "dwrecon/png_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dw::io {

namespace {

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
    append_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const auto crc = crc32(0L, out.data() + crc_start, static_cast<uInt>(out.size() - crc_start));
    append_u32(out, static_cast<std::uint32_t>(crc));
}

void write_png(const std::string& path, std::size_t width, std::size_t height,
               std::uint8_t color_type, const std::vector<std::uint8_t>& palette,
               const std::vector<std::uint8_t>& pixels) {
    if (pixels.size() != width * height)
        throw std::invalid_argument("png: pixel buffer does not match dimensions");

    // Filter byte 0 per scanline.
    std::vector<std::uint8_t> raw;
    raw.reserve(height * (width + 1));
    for (std::size_t y = 0; y < height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), pixels.begin() + y * width, pixels.begin() + (y + 1) * width);
    }
    uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> comp(comp_len);
    if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK)
        throw std::runtime_error("png: zlib compression failed");
    comp.resize(comp_len);

    std::vector<std::uint8_t> file = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    std::vector<std::uint8_t> ihdr;
    append_u32(ihdr, static_cast<std::uint32_t>(width));
    append_u32(ihdr, static_cast<std::uint32_t>(height));
    ihdr.push_back(8);           // bit depth
    ihdr.push_back(color_type);  // 0 gray, 3 indexed
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    append_chunk(file, "IHDR", ihdr);
    if (color_type == 3) append_chunk(file, "PLTE", palette);
    append_chunk(file, "IDAT", comp);
    append_chunk(file, "IEND", {});

    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("png: cannot open " + path + " for writing");
    os.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    if (!os) throw std::runtime_error("png: write failed for " + path);
}

}  // namespace

void write_png_gray(const std::string& path, std::size_t width, std::size_t height,
                    const std::vector<std::uint8_t>& pixels) {
    write_png(path, width, height, 0, {}, pixels);
}

void write_bmode_png(const std::string& path, const Tensor& db_image, double dynamic_range) {
    const std::size_t h = db_image.dim(0), w = db_image.dim(1);
    std::vector<std::uint8_t> px(h * w);
    for (std::size_t i = 0; i < h * w; ++i) {
        const double v = (db_image[i] + dynamic_range) / dynamic_range;  // [-DR,0] -> [0,1]
        px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    write_png_gray(path, w, h, px);
}

void write_png_indexed(const std::string& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& labels, std::size_t num_labels) {
    if (num_labels == 0 || num_labels > 16)
        throw std::invalid_argument("png: supports 1..16 labels");
    // A small qualitative palette.
    static const std::uint8_t base[16][3] = {
        {31, 119, 180}, {255, 127, 14}, {44, 160, 44},  {214, 39, 40},
        {148, 103, 189}, {140, 86, 75},  {227, 119, 194}, {127, 127, 127},
        {188, 189, 34}, {23, 190, 207}, {174, 199, 232}, {255, 187, 120},
        {152, 223, 138}, {255, 152, 150}, {197, 176, 213}, {196, 156, 148}};
    std::vector<std::uint8_t> palette;
    for (std::size_t i = 0; i < num_labels; ++i)
        palette.insert(palette.end(), base[i], base[i] + 3);
    write_png(path, width, height, 3, palette, labels);
}

}  // namespace dw::io
