#pragma once

#include <zlib.h>

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vialnet/image.hpp"

namespace vialnet {

class ImageIoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File is not a PNG we can read (bad signature, palette/interlaced data,
/// unexpected bit depth, corrupt chunk).
class UnsupportedImageFormat : public ImageIoError {
public:
    using ImageIoError::ImageIoError;
};

/// File ends before the pixel data is complete.
class TruncatedImageFile : public ImageIoError {
public:
    using ImageIoError::ImageIoError;
};

namespace detail {

inline void put_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint32_t read_u32be(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | static_cast<std::uint32_t>(p[3]);
}

inline void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                         const std::uint8_t* data, std::size_t len) {
    put_u32be(out, static_cast<std::uint32_t>(len));
    const std::size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data, data + len);
    const auto crc = crc32(0L, out.data() + start, static_cast<uInt>(4 + len));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

inline std::uint8_t paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a);
    const int pb = std::abs(p - b);
    const int pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

inline constexpr std::uint8_t kPngSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace detail

/// Encodes an 8-bit RGB PNG (color type 2, no interlace).
inline std::vector<std::uint8_t> encode_png(const ImageU8& img) {
    std::vector<std::uint8_t> ihdr;
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.width));
    detail::put_u32be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * 3;
    std::vector<std::uint8_t> raw((row_bytes + 1) * static_cast<std::size_t>(img.height));
    for (int y = 0; y < img.height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1);
        row[0] = 0;  // filter: none
        std::memcpy(row + 1, img.data.data() + static_cast<std::size_t>(y) * row_bytes, row_bytes);
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 6) != Z_OK) {
        throw ImageIoError("png encode: deflate failed");
    }
    compressed.resize(bound);

    std::vector<std::uint8_t> out(detail::kPngSignature, detail::kPngSignature + 8);
    detail::append_chunk(out, "IHDR", ihdr.data(), ihdr.size());
    detail::append_chunk(out, "IDAT", compressed.data(), compressed.size());
    detail::append_chunk(out, "IEND", nullptr, 0);
    return out;
}

/// Decodes a PNG into 8-bit RGB. Gray and gray+alpha inputs are replicated
/// across channels, alpha is dropped, and 16-bit samples keep their high
/// byte. Palette and interlaced files are rejected.
inline ImageU8 decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), detail::kPngSignature, 8) != 0) {
        throw UnsupportedImageFormat("not a PNG file");
    }

    std::size_t pos = 8;
    bool have_ihdr = false;
    bool have_iend = false;
    std::uint32_t width = 0, height = 0;
    int depth = 0, color_type = 0;
    std::vector<std::uint8_t> idat;

    while (pos < bytes.size()) {
        if (pos + 8 > bytes.size()) {
            throw TruncatedImageFile("png: truncated chunk header");
        }
        const std::uint32_t len = detail::read_u32be(bytes.data() + pos);
        char type[5] = {0};
        std::memcpy(type, bytes.data() + pos + 4, 4);
        if (pos + 12 + static_cast<std::size_t>(len) > bytes.size()) {
            throw TruncatedImageFile("png: truncated chunk data");
        }
        const std::uint8_t* data = bytes.data() + pos + 8;
        const std::uint32_t stored_crc = detail::read_u32be(data + len);
        const auto crc = crc32(0L, bytes.data() + pos + 4, static_cast<uInt>(4 + len));
        if (static_cast<std::uint32_t>(crc) != stored_crc) {
            throw UnsupportedImageFormat(std::string("png: bad crc in ") + type + " chunk");
        }

        if (std::strcmp(type, "IHDR") == 0) {
            if (len != 13) {
                throw UnsupportedImageFormat("png: bad IHDR length");
            }
            width = detail::read_u32be(data);
            height = detail::read_u32be(data + 4);
            depth = data[8];
            color_type = data[9];
            if (data[10] != 0 || data[11] != 0) {
                throw UnsupportedImageFormat("png: unknown compression/filter method");
            }
            if (data[12] != 0) {
                throw UnsupportedImageFormat("png: interlaced images not supported");
            }
            if (depth != 8 && depth != 16) {
                throw UnsupportedImageFormat("png: bit depth " + std::to_string(depth) + " not supported");
            }
            if (color_type != 0 && color_type != 2 && color_type != 4 && color_type != 6) {
                throw UnsupportedImageFormat("png: color type " + std::to_string(color_type) +
                                             " not supported");
            }
            if (width == 0 || height == 0) {
                throw UnsupportedImageFormat("png: empty image");
            }
            have_ihdr = true;
        } else if (std::strcmp(type, "IDAT") == 0) {
            idat.insert(idat.end(), data, data + len);
        } else if (std::strcmp(type, "IEND") == 0) {
            have_iend = true;
            break;
        }
        pos += 12 + static_cast<std::size_t>(len);
    }
    if (!have_ihdr) {
        throw UnsupportedImageFormat("png: missing IHDR");
    }
    if (!have_iend) {
        throw TruncatedImageFile("png: missing IEND");
    }
    if (idat.empty()) {
        throw TruncatedImageFile("png: no pixel data");
    }

    const int channels = color_type == 0 ? 1 : color_type == 2 ? 3 : color_type == 4 ? 2 : 4;
    const int sample_bytes = depth / 8;
    const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * sample_bytes;
    const std::size_t expected = (row_bytes + 1) * height;

    std::vector<std::uint8_t> raw(expected);
    uLongf raw_len = static_cast<uLongf>(expected);
    const int zrc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
    if (zrc == Z_BUF_ERROR || (zrc == Z_OK && raw_len != expected)) {
        throw TruncatedImageFile("png: pixel data shorter than expected");
    }
    if (zrc != Z_OK) {
        throw UnsupportedImageFormat("png: corrupt compressed data");
    }

    // Undo per-row filtering in place.
    const int bpp = channels * sample_bytes;
    std::vector<std::uint8_t> prev_row(row_bytes, 0);
    ImageU8 img(static_cast<int>(height), static_cast<int>(width));
    for (std::uint32_t y = 0; y < height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1);
        const int filter = row[0];
        std::uint8_t* cur = row + 1;
        switch (filter) {
            case 0:
                break;
            case 1:
                for (std::size_t i = bpp; i < row_bytes; ++i) {
                    cur[i] = static_cast<std::uint8_t>(cur[i] + cur[i - bpp]);
                }
                break;
            case 2:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    cur[i] = static_cast<std::uint8_t>(cur[i] + prev_row[i]);
                }
                break;
            case 3:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + ((left + prev_row[i]) >> 1));
                }
                break;
            case 4:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    const int upleft = i >= static_cast<std::size_t>(bpp) ? prev_row[i - bpp] : 0;
                    cur[i] = static_cast<std::uint8_t>(cur[i] + detail::paeth(left, prev_row[i], upleft));
                }
                break;
            default:
                throw UnsupportedImageFormat("png: unknown row filter " + std::to_string(filter));
        }
        std::memcpy(prev_row.data(), cur, row_bytes);

        // Convert the defiltered row to 8-bit RGB.
        for (std::uint32_t x = 0; x < width; ++x) {
            const std::uint8_t* px = cur + static_cast<std::size_t>(x) * bpp;
            std::uint8_t r, g, b;
            if (channels <= 2) {
                r = g = b = px[0];  // 16-bit: big-endian, high byte first
            } else {
                r = px[0];
                g = px[sample_bytes];
                b = px[2 * sample_bytes];
            }
            img.at(static_cast<int>(y), static_cast<int>(x), 0) = r;
            img.at(static_cast<int>(y), static_cast<int>(x), 1) = g;
            img.at(static_cast<int>(y), static_cast<int>(x), 2) = b;
        }
    }
    return img;
}

inline void save_raster(const ImageU8& img, const std::string& path) {
    const std::vector<std::uint8_t> bytes = encode_png(img);
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ImageIoError("cannot open for writing: " + path);
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) {
        throw ImageIoError("write failed: " + path);
    }
}

inline ImageU8 load_raster(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ImageIoError("cannot open: " + path);
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

}  // namespace vialnet
