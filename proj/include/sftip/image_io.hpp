#pragma once

#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sftip/field.hpp"

namespace sftip {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    if (!is.good() && !is.eof()) throw IoError("read failed: " + path);
    return bytes;
}

// All writers render to memory first; the bytes land on disk in one
// temp-file + rename step so a failed run never leaves partial output.
inline void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot create file: " + tmp);
        os.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        os.flush();
        if (!os) {
            std::remove(tmp.c_str());
            throw IoError("write failed: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw IoError("rename failed: " + path);
    }
}

inline void write_file_atomic(const std::string& path, const std::string& text) {
    write_file_atomic(path, text.data(), text.size());
}

struct MemCursor {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t want) {
    MemCursor* cur = static_cast<MemCursor*>(png_get_io_ptr(png));
    if (cur->pos + want > cur->size) png_error(png, "truncated PNG stream");
    std::memcpy(out, cur->data + cur->pos, want);
    cur->pos += want;
}

inline void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<unsigned char>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

inline void png_mem_flush(png_structp) {}

// 16-bit level field (values 0..65535) from grayscale PNG bytes.
// 8-bit inputs are scaled by 257 so full scale maps to full scale.
inline RealField decode_png_gray(const std::vector<unsigned char>& bytes,
                                 const std::string& origin) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw IoError("not a PNG file: " + origin);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }

    MemCursor cursor{bytes.data(), bytes.size(), 0};
    std::vector<std::vector<unsigned char>> rows;
    std::string error;
    int width = 0, height = 0, depth = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError(error.empty() ? "invalid PNG: " + origin : error);
    }

    png_set_read_fn(png, &cursor, &png_mem_read);
    png_read_info(png, info);
    width = static_cast<int>(png_get_image_width(png, info));
    height = static_cast<int>(png_get_image_height(png, info));
    depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_GRAY_ALPHA) {
        error = "grayscale PNG required: " + origin;
        longjmp(png_jmpbuf(png), 1);
    }
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_strip_alpha(png);
    if (depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
        depth = 8;
    }
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    rows.assign(static_cast<std::size_t>(height), std::vector<unsigned char>(rowbytes));
    for (int y = 0; y < height; ++y) png_read_row(png, rows[static_cast<std::size_t>(y)].data(), nullptr);
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    RealField out(width, height);
    for (int y = 0; y < height; ++y) {
        const unsigned char* row = rows[static_cast<std::size_t>(y)].data();
        for (int x = 0; x < width; ++x) {
            if (depth == 16) {
                const unsigned v = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
                out.at(x, y) = static_cast<double>(v);
            } else {
                out.at(x, y) = static_cast<double>(row[x]) * 257.0;
            }
        }
    }
    return out;
}

// 16-bit grayscale PNG from a level field (values must be 0..65535).
inline std::vector<unsigned char> encode_png_gray16(const RealField& levels) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }

    std::vector<unsigned char> bytes;
    std::vector<unsigned char> row(static_cast<std::size_t>(levels.width()) * 2);

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed");
    }

    png_set_write_fn(png, &bytes, &png_mem_write, &png_mem_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(levels.width()),
                 static_cast<png_uint_32>(levels.height()), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < levels.height(); ++y) {
        for (int x = 0; x < levels.width(); ++x) {
            const unsigned v = static_cast<unsigned>(levels.at(x, y));
            row[2 * static_cast<std::size_t>(x)] = static_cast<unsigned char>(v >> 8);
            row[2 * static_cast<std::size_t>(x) + 1] = static_cast<unsigned char>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return bytes;
}

// Minimal classic-TIFF reader: first IFD, uncompressed single-sample
// grayscale, 8 or 16 bits, either byte order, any strip layout.
struct TiffParser {
    const std::vector<unsigned char>& bytes;
    bool little = true;

    explicit TiffParser(const std::vector<unsigned char>& b) : bytes(b) {}

    std::uint32_t ru(std::size_t off, int n) const {
        if (off + static_cast<std::size_t>(n) > bytes.size()) throw IoError("truncated TIFF");
        std::uint32_t v = 0;
        for (int i = 0; i < n; ++i) {
            const std::uint32_t byte = bytes[off + static_cast<std::size_t>(i)];
            v |= little ? byte << (8 * i) : byte << (8 * (n - 1 - i));
        }
        return v;
    }
};

inline RealField decode_tiff_gray(const std::vector<unsigned char>& bytes,
                                  const std::string& origin) {
    TiffParser t(bytes);
    if (bytes.size() < 8) throw IoError("not a TIFF file: " + origin);
    if (bytes[0] == 'I' && bytes[1] == 'I')
        t.little = true;
    else if (bytes[0] == 'M' && bytes[1] == 'M')
        t.little = false;
    else
        throw IoError("not a TIFF file: " + origin);
    if (t.ru(2, 2) != 42) throw IoError("not a TIFF file: " + origin);

    const std::uint32_t ifd = t.ru(4, 4);
    const std::uint32_t n_entries = t.ru(ifd, 2);
    std::uint32_t width = 0, height = 0, bits = 1, compression = 1, photometric = 1;
    std::uint32_t samples = 1, rows_per_strip = 0xffffffffu;
    std::vector<std::uint32_t> strip_offsets, strip_counts;

    auto read_values = [&](std::size_t entry, std::vector<std::uint32_t>& out) {
        const std::uint32_t type = t.ru(entry + 2, 2);
        const std::uint32_t count = t.ru(entry + 4, 4);
        const int elem = type == 3 ? 2 : 4;  // SHORT or LONG
        if (type != 3 && type != 4) throw IoError("unsupported TIFF tag type: " + origin);
        const std::size_t total = static_cast<std::size_t>(count) * static_cast<std::size_t>(elem);
        const std::size_t base = total <= 4 ? entry + 8 : t.ru(entry + 8, 4);
        out.clear();
        for (std::uint32_t i = 0; i < count; ++i)
            out.push_back(t.ru(base + static_cast<std::size_t>(i) * static_cast<std::size_t>(elem), elem));
    };

    std::vector<std::uint32_t> vals;
    for (std::uint32_t e = 0; e < n_entries; ++e) {
        const std::size_t entry = ifd + 2 + static_cast<std::size_t>(e) * 12;
        const std::uint32_t tag = t.ru(entry, 2);
        switch (tag) {
            case 256: read_values(entry, vals); width = vals.at(0); break;
            case 257: read_values(entry, vals); height = vals.at(0); break;
            case 258: read_values(entry, vals); bits = vals.at(0); break;
            case 259: read_values(entry, vals); compression = vals.at(0); break;
            case 262: read_values(entry, vals); photometric = vals.at(0); break;
            case 273: read_values(entry, strip_offsets); break;
            case 277: read_values(entry, vals); samples = vals.at(0); break;
            case 278: read_values(entry, vals); rows_per_strip = vals.at(0); break;
            case 279: read_values(entry, strip_counts); break;
            default: break;  // resolution and friends: not needed
        }
    }

    if (width == 0 || height == 0) throw IoError("TIFF missing dimensions: " + origin);
    if (compression != 1) throw IoError("only uncompressed TIFF supported: " + origin);
    if (samples != 1 || (photometric != 0 && photometric != 1))
        throw IoError("grayscale TIFF required: " + origin);
    if (bits != 8 && bits != 16) throw IoError("TIFF must be 8- or 16-bit: " + origin);
    if (strip_offsets.empty()) throw IoError("TIFF missing strip offsets: " + origin);

    RealField out(static_cast<int>(width), static_cast<int>(height));
    const int bpp = static_cast<int>(bits) / 8;
    std::uint32_t y = 0;
    for (std::size_t s = 0; s < strip_offsets.size() && y < height; ++s) {
        std::size_t off = strip_offsets[s];
        const std::uint32_t strip_rows = std::min<std::uint32_t>(rows_per_strip, height - y);
        for (std::uint32_t r = 0; r < strip_rows; ++r, ++y) {
            for (std::uint32_t x = 0; x < width; ++x) {
                std::uint32_t v = t.ru(off, bpp);
                off += static_cast<std::size_t>(bpp);
                if (bits == 8) v *= 257;
                if (photometric == 0) v = 65535 - v;
                out.at(static_cast<int>(x), static_cast<int>(y)) = static_cast<double>(v);
            }
        }
    }
    if (y != height) throw IoError("TIFF strip data incomplete: " + origin);
    return out;
}

inline void push_u16(std::vector<unsigned char>& b, std::uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

inline void push_u32(std::vector<unsigned char>& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void push_ifd_entry(std::vector<unsigned char>& b, std::uint16_t tag, std::uint16_t type,
                           std::uint32_t count, std::uint32_t value) {
    push_u16(b, tag);
    push_u16(b, type);
    push_u32(b, count);
    if (type == 3 && count == 1) {
        push_u16(b, static_cast<std::uint16_t>(value));
        push_u16(b, 0);
    } else {
        push_u32(b, value);
    }
}

// Little-endian classic TIFF, one 16-bit gray strip, no compression.
inline std::vector<unsigned char> encode_tiff_gray16(const RealField& levels) {
    const std::uint32_t w = static_cast<std::uint32_t>(levels.width());
    const std::uint32_t h = static_cast<std::uint32_t>(levels.height());
    const std::uint32_t data_bytes = w * h * 2;
    const std::uint32_t data_off = 8;
    const std::uint32_t ifd_off = data_off + data_bytes + (data_bytes % 2);

    std::vector<unsigned char> b;
    b.reserve(ifd_off + 2 + 9 * 12 + 4);
    b.push_back('I');
    b.push_back('I');
    push_u16(b, 42);
    push_u32(b, ifd_off);
    for (int y = 0; y < levels.height(); ++y)
        for (int x = 0; x < levels.width(); ++x)
            push_u16(b, static_cast<std::uint16_t>(levels.at(x, y)));
    if (data_bytes % 2) b.push_back(0);

    push_u16(b, 9);  // entry count, tags ascending
    push_ifd_entry(b, 256, 4, 1, w);
    push_ifd_entry(b, 257, 4, 1, h);
    push_ifd_entry(b, 258, 3, 1, 16);
    push_ifd_entry(b, 259, 3, 1, 1);
    push_ifd_entry(b, 262, 3, 1, 1);
    push_ifd_entry(b, 273, 4, 1, data_off);
    push_ifd_entry(b, 277, 3, 1, 1);
    push_ifd_entry(b, 278, 4, 1, h);
    push_ifd_entry(b, 279, 4, 1, data_bytes);
    push_u32(b, 0);  // no next IFD
    return b;
}

inline bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

/// Grayscale image file (PNG or TIFF, sniffed by magic bytes) as raw 16-bit
/// levels in [0, 65535]; 8-bit files are scaled so full scale matches.
inline RealField read_image_levels(const std::string& path) {
    const std::vector<unsigned char> bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0)
        return detail::decode_png_gray(bytes, path);
    if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I') ||
                              (bytes[0] == 'M' && bytes[1] == 'M')))
        return detail::decode_tiff_gray(bytes, path);
    throw IoError("unrecognized image format (PNG or TIFF expected): " + path);
}

/// Same file, normalized to [0, 1] by the 16-bit full scale.
inline RealField read_image_normalized(const std::string& path) {
    RealField levels = read_image_levels(path);
    for (std::size_t i = 0; i < levels.size(); ++i) levels[i] /= 65535.0;
    return levels;
}

/// Writes 16-bit grayscale levels (0..65535, e.g. from quantize_16bit).
/// Format chosen by extension: .png, or .tif/.tiff.
inline void write_image_levels(const std::string& path, const RealField& levels) {
    for (double v : levels.samples())
        if (!(v >= 0.0) || v > 65535.0)
            throw std::invalid_argument("write_image_levels: samples must lie in [0, 65535]");
    std::vector<unsigned char> bytes;
    if (detail::has_suffix(path, ".png"))
        bytes = detail::encode_png_gray16(levels);
    else if (detail::has_suffix(path, ".tif") || detail::has_suffix(path, ".tiff"))
        bytes = detail::encode_tiff_gray16(levels);
    else
        throw IoError("unsupported output extension (.png/.tif/.tiff): " + path);
    detail::write_file_atomic(path, bytes.data(), bytes.size());
}

/// Full-scale 16-bit render of an arbitrary non-negative field.
inline void write_image_scaled(const std::string& path, const RealField& field) {
    write_image_levels(path, quantize_16bit(field));
}

/// Plain-text matrix: lossless double-precision dump, for values a 16-bit
/// image would crush (PSF tails). Line 1 is a version marker, line 2 the
/// dimensions, then one row per line.
inline std::string matrix_to_text(const RealField& f) {
    std::string out = "# sftip-matrix format_version=1\n";
    out += std::to_string(f.width()) + " " + std::to_string(f.height()) + "\n";
    char buf[64];
    for (int y = 0; y < f.height(); ++y) {
        for (int x = 0; x < f.width(); ++x) {
            std::snprintf(buf, sizeof(buf), "%.17g", f.at(x, y));
            out += buf;
            out += (x + 1 == f.width()) ? '\n' : ' ';
        }
    }
    return out;
}

inline void write_matrix_text(const std::string& path, const RealField& f) {
    detail::write_file_atomic(path, matrix_to_text(f));
}

inline RealField read_matrix_text(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open matrix file: " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("# sftip-matrix", 0) != 0)
        throw IoError("not a matrix file: " + path);
    int w = 0, h = 0;
    if (!(is >> w >> h) || w < 1 || h < 1) throw IoError("bad matrix dimensions: " + path);
    RealField f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!(is >> f.at(x, y))) throw IoError("matrix data incomplete: " + path);
    return f;
}

}  // namespace sftip
