#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

namespace vra {

struct Color {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Color&, const Color&) = default;
};

namespace colors {
inline constexpr Color white{255, 255, 255};
inline constexpr Color black{0, 0, 0};
inline constexpr Color crimson{200, 30, 45};
inline constexpr Color royal_blue{45, 80, 200};
inline constexpr Color forest{25, 140, 60};
inline constexpr Color orange{235, 140, 20};
inline constexpr Color purple{130, 50, 170};
inline constexpr Color teal{0, 150, 160};
inline constexpr Color magenta{200, 40, 160};
inline constexpr Color olive{130, 130, 30};
inline constexpr Color gray{128, 128, 128};
inline constexpr Color light_gray{210, 210, 210};
}  // namespace colors

namespace fontdata {

// 5x7 bitmap glyphs, one byte per row, low 5 bits used. Lowercase letters are
// drawn as uppercase; unknown characters render as a filled box.
struct Glyph {
    char ch;
    std::array<std::uint8_t, 7> rows;
};

inline constexpr Glyph kGlyphs[] = {
    {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
    {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
    {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
    {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
    {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
    {'%', {0x18, 0x19, 0x02, 0x04, 0x08, 0x13, 0x03}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
    {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
    {'<', {0x02, 0x04, 0x08, 0x10, 0x08, 0x04, 0x02}},
    {'>', {0x08, 0x04, 0x02, 0x01, 0x02, 0x04, 0x08}},
};

inline const std::array<std::uint8_t, 7>& glyph_for(char c) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    for (const auto& g : kGlyphs) {
        if (g.ch == c) return g.rows;
    }
    static constexpr std::array<std::uint8_t, 7> box = {0x1F, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1F};
    return box;
}

}  // namespace fontdata

/// Fixed-size RGB8 canvas with integer raster primitives. No anti-aliasing,
/// no system fonts: identical inputs produce identical pixels.
class Canvas {
  public:
    Canvas(int width, int height, Color background = colors::white)
        : width_(width), height_(height),
          pixels_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        if (width < 1 || height < 1) throw std::invalid_argument("canvas: empty viewport");
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) set(x, y, background);
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }

    void set(int x, int y, Color c) {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
        std::size_t at = 3 * (static_cast<std::size_t>(y) * width_ + x);
        pixels_[at] = c.r;
        pixels_[at + 1] = c.g;
        pixels_[at + 2] = c.b;
    }

    Color get(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) return colors::black;
        std::size_t at = 3 * (static_cast<std::size_t>(y) * width_ + x);
        return Color{pixels_[at], pixels_[at + 1], pixels_[at + 2]};
    }

    void fill_rect(int x0, int y0, int x1, int y1, Color c) {
        for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y) {
            for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x) set(x, y, c);
        }
    }

    void fill_disc(double cx, double cy, double radius, Color c) {
        const int x0 = static_cast<int>(std::floor(cx - radius)) - 1;
        const int x1 = static_cast<int>(std::ceil(cx + radius)) + 1;
        const int y0 = static_cast<int>(std::floor(cy - radius)) - 1;
        const int y1 = static_cast<int>(std::ceil(cy + radius)) + 1;
        const double r2 = radius * radius;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - cx;
                const double dy = y - cy;
                if (dx * dx + dy * dy <= r2) set(x, y, c);
            }
        }
    }

    /// Thick segment: every pixel within half_width of the center line.
    void draw_segment(double ax, double ay, double bx, double by, double half_width, Color c) {
        const int x0 = static_cast<int>(std::floor(std::min(ax, bx) - half_width)) - 1;
        const int x1 = static_cast<int>(std::ceil(std::max(ax, bx) + half_width)) + 1;
        const int y0 = static_cast<int>(std::floor(std::min(ay, by) - half_width)) - 1;
        const int y1 = static_cast<int>(std::ceil(std::max(ay, by) + half_width)) + 1;
        const double vx = bx - ax;
        const double vy = by - ay;
        const double len2 = vx * vx + vy * vy;
        const double hw2 = half_width * half_width;
        for (int y = std::max(0, y0); y <= std::min(height_ - 1, y1); ++y) {
            for (int x = std::max(0, x0); x <= std::min(width_ - 1, x1); ++x) {
                double px = x - ax;
                double py = y - ay;
                double t = len2 > 0 ? std::clamp((px * vx + py * vy) / len2, 0.0, 1.0) : 0.0;
                double dx = px - t * vx;
                double dy = py - t * vy;
                if (dx * dx + dy * dy <= hw2) set(x, y, c);
            }
        }
    }

    void draw_text(int x, int y, std::string_view text, int scale, Color c) {
        int cursor = x;
        for (char ch : text) {
            const auto& rows = fontdata::glyph_for(ch);
            for (int r = 0; r < 7; ++r) {
                for (int col = 0; col < 5; ++col) {
                    if (rows[static_cast<std::size_t>(r)] & (1 << (4 - col))) {
                        fill_rect(cursor + col * scale, y + r * scale, cursor + col * scale + scale - 1,
                                  y + r * scale + scale - 1, c);
                    }
                }
            }
            cursor += 6 * scale;  // 5 columns + 1 gap
        }
    }

    static int text_width(std::string_view text, int scale) {
        if (text.empty()) return 0;
        return static_cast<int>(text.size()) * 6 * scale - scale;
    }

    static int text_height(int scale) { return 7 * scale; }

    const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

namespace detail {

inline void put_u32_be(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

inline void put_chunk(std::string& out, const char type[4], const std::string& payload) {
    put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
    std::string body(type, 4);
    body += payload;
    out += body;
    const auto crc =
        ::crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()));
    put_u32_be(out, static_cast<std::uint32_t>(crc));
}

}  // namespace detail

/// Lossless truecolor PNG (filter 0 scanlines, fixed zlib level) so encoded
/// bytes are a pure function of the pixel data.
inline std::string encode_png(const Canvas& canvas) {
    std::string out("\x89PNG\r\n\x1a\n", 8);

    std::string ihdr;
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(canvas.width()));
    detail::put_u32_be(ihdr, static_cast<std::uint32_t>(canvas.height()));
    ihdr += '\x08';  // bit depth
    ihdr += '\x02';  // truecolor
    ihdr += '\x00';  // compression
    ihdr += '\x00';  // filter
    ihdr += '\x00';  // no interlace
    detail::put_chunk(out, "IHDR", ihdr);

    const std::size_t stride = static_cast<std::size_t>(canvas.width()) * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * static_cast<std::size_t>(canvas.height()));
    for (int y = 0; y < canvas.height(); ++y) {
        raw.push_back(0);  // filter: none
        const std::uint8_t* row = canvas.pixels().data() + static_cast<std::size_t>(y) * stride;
        raw.insert(raw.end(), row, row + stride);
    }

    uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
    std::string idat(bound, '\0');
    if (::compress2(reinterpret_cast<Bytef*>(idat.data()), &bound,
                    reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                    6) != Z_OK) {
        throw std::runtime_error("png: deflate failed");
    }
    idat.resize(bound);
    detail::put_chunk(out, "IDAT", idat);
    detail::put_chunk(out, "IEND", "");
    return out;
}

}  // namespace vra
