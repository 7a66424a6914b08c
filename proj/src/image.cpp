#include "splitrender/image.hpp"

#include <algorithm>
#include <fstream>
#include <string>

#include "splitrender/errors.hpp"

namespace splitrender {

namespace {

std::size_t checked_byte_size(int width, int height) {
    if (width < 1 || height < 1) {
        throw GeometryError("image dimensions must be at least 1x1, got " +
                            std::to_string(width) + "x" + std::to_string(height));
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * Image::kChannels;
}

}  // namespace

Image::Image(int width, int height, Rgb8 fill)
    : width_(width), height_(height), bytes_(checked_byte_size(width, height)) {
    for (std::size_t i = 0; i < bytes_.size(); i += kChannels) {
        bytes_[i] = fill.r;
        bytes_[i + 1] = fill.g;
        bytes_[i + 2] = fill.b;
    }
}

Image::Image(int width, int height, std::vector<std::uint8_t> bytes)
    : width_(width), height_(height), bytes_(std::move(bytes)) {
    if (bytes_.size() != checked_byte_size(width, height)) {
        throw GeometryError("pixel buffer length does not match " + std::to_string(width) + "x" +
                            std::to_string(height));
    }
}

Rgb8 Image::at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * kChannels;
    return {bytes_[i], bytes_[i + 1], bytes_[i + 2]};
}

void Image::set(int x, int y, Rgb8 c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * kChannels;
    bytes_[i] = c.r;
    bytes_[i + 1] = c.g;
    bytes_[i + 2] = c.b;
}

std::span<const std::uint8_t> Image::row(int y) const {
    const std::size_t stride = static_cast<std::size_t>(width_) * kChannels;
    return std::span<const std::uint8_t>(bytes_).subspan(y * stride, stride);
}

std::span<std::uint8_t> Image::row(int y) {
    const std::size_t stride = static_cast<std::size_t>(width_) * kChannels;
    return std::span<std::uint8_t>(bytes_).subspan(y * stride, stride);
}

bool rect_within(const Rect& r, Dims bounds) {
    return r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1 && r.x <= bounds.w - r.w &&
           r.y <= bounds.h - r.h;
}

Image crop(const Image& src, const Rect& region) {
    if (!rect_within(region, src.dims())) {
        throw GeometryError("crop region out of bounds");
    }
    Image out(region.w, region.h);
    const std::size_t span_bytes = static_cast<std::size_t>(region.w) * Image::kChannels;
    for (int j = 0; j < region.h; ++j) {
        auto src_row = src.row(region.y + j).subspan(region.x * Image::kChannels, span_bytes);
        std::copy(src_row.begin(), src_row.end(), out.row(j).begin());
    }
    return out;
}

void blit(Image& dst, const Image& src, int x, int y) {
    if (!rect_within({x, y, src.width(), src.height()}, dst.dims())) {
        throw GeometryError("blit target out of bounds");
    }
    for (int j = 0; j < src.height(); ++j) {
        auto src_row = src.row(j);
        std::copy(src_row.begin(), src_row.end(),
                  dst.row(y + j).begin() + static_cast<std::ptrdiff_t>(x) * Image::kChannels);
    }
}

void write_ppm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.bytes().data()),
              static_cast<std::streamsize>(img.byte_size()));
    if (!out) {
        throw std::runtime_error("short write to " + path.string());
    }
}

Image read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P6" || maxval != 255 || !in) {
        throw DecodeError("not a P6/255 PPM: " + path.string());
    }
    in.get();  // single whitespace before the raster
    std::vector<std::uint8_t> bytes(checked_byte_size(width, height));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
        throw DecodeError("truncated PPM raster: " + path.string());
    }
    return Image(width, height, std::move(bytes));
}

}  // namespace splitrender
