#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace splitrender {

struct Rgb8 {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb8&, const Rgb8&) = default;
};

/// Pixel rectangle with a top-left origin.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 1;
    int h = 1;

    friend bool operator==(const Rect&, const Rect&) = default;
};

struct Dims {
    int w = 0;
    int h = 0;

    friend bool operator==(const Dims&, const Dims&) = default;
};

/// Dense row-major RGB8 buffer, 3 bytes per pixel.
class Image {
public:
    static constexpr int kChannels = 3;

    Image() = default;
    Image(int width, int height, Rgb8 fill = {});
    Image(int width, int height, std::vector<std::uint8_t> bytes);

    int width() const { return width_; }
    int height() const { return height_; }
    Dims dims() const { return {width_, height_}; }
    bool empty() const { return bytes_.empty(); }

    std::span<const std::uint8_t> bytes() const { return bytes_; }
    std::span<std::uint8_t> bytes() { return bytes_; }
    std::size_t byte_size() const { return bytes_.size(); }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    Rgb8 at(int x, int y) const;
    void set(int x, int y, Rgb8 c);

    std::span<const std::uint8_t> row(int y) const;
    std::span<std::uint8_t> row(int y);

    friend bool operator==(const Image&, const Image&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bytes_;
};

/// Copies `region` out of `src`. Throws GeometryError if it does not fit.
Image crop(const Image& src, const Rect& region);

/// Writes `src` into `dst` with its top-left corner at (x, y).
void blit(Image& dst, const Image& src, int x, int y);

bool rect_within(const Rect& r, Dims bounds);

// Binary PPM (P6, maxval 255).
void write_ppm(const Image& img, const std::filesystem::path& path);
Image read_ppm(const std::filesystem::path& path);

}  // namespace splitrender
