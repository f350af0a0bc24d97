#include "contourseg/image_io.hpp"

#include "contourseg/errors.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

extern "C" {
#include <jpeglib.h>
}

namespace contourseg {

namespace {

bool is_png(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    return b.size() >= 8 && std::memcmp(b.data(), kSig, 8) == 0;
}

bool is_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xff && b[1] == 0xd8 && b[2] == 0xff;
}

// RAII over the libpng simplified API.
struct PngReader {
    png_image image;

    explicit PngReader(std::span<const std::uint8_t> bytes) {
        std::memset(&image, 0, sizeof image);
        image.version = PNG_IMAGE_VERSION;
        if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
            const std::string msg = image.message;
            png_image_free(&image);
            throw Error(ErrorCode::ImageDecode, "png header: " + msg);
        }
    }
    ~PngReader() { png_image_free(&image); }
    PngReader(const PngReader&) = delete;
    PngReader& operator=(const PngReader&) = delete;

    Dims dims() const { return {static_cast<int>(image.width), static_cast<int>(image.height)}; }

    std::vector<std::uint8_t> finish(png_uint_32 format) {
        image.format = format;
        std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
        if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
            throw Error(ErrorCode::ImageDecode, std::string("png data: ") + image.message);
        }
        return buf;
    }
};

Bytes encode_png(const std::uint8_t* data, Dims dims, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(dims.width);
    image.height = static_cast<png_uint_32>(dims.height);
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
        throw Error(ErrorCode::Io, std::string("png encode: ") + image.message);
    }
    Bytes out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
        throw Error(ErrorCode::Io, std::string("png encode: ") + image.message);
    }
    out.resize(size);
    return out;
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// No C++ objects with destructors may live across the setjmp region.
bool jpeg_decode_raw(std::span<const std::uint8_t> bytes, bool header_only, std::size_t max_pixels,
                     Dims& dims, std::uint8_t* (*alloc)(void*, std::size_t), void* ctx,
                     char* error, bool& too_large) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    too_large = false;
    if (setjmp(jerr.jump)) {
        std::strncpy(error, jerr.message, JMSG_LENGTH_MAX);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    dims = {static_cast<int>(cinfo.image_width), static_cast<int>(cinfo.image_height)};
    if (header_only) {
        jpeg_destroy_decompress(&cinfo);
        return true;
    }
    if (max_pixels != 0 && dims.area() > max_pixels) {
        too_large = true;
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const std::size_t stride = static_cast<std::size_t>(cinfo.output_width) * 3;
    std::uint8_t* out = alloc(ctx, stride * cinfo.output_height);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = out + stride * cinfo.output_scanline;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

std::uint8_t* alloc_vector(void* ctx, std::size_t n) {
    auto* v = static_cast<std::vector<std::uint8_t>*>(ctx);
    v->resize(n);
    return v->data();
}

}  // namespace

Dims probe_image_dims(std::span<const std::uint8_t> bytes) {
    if (is_png(bytes)) {
        return PngReader(bytes).dims();
    }
    if (is_jpeg(bytes)) {
        Dims dims;
        char error[JMSG_LENGTH_MAX] = {};
        bool too_large = false;
        if (!jpeg_decode_raw(bytes, true, 0, dims, alloc_vector, nullptr, error, too_large)) {
            throw Error(ErrorCode::ImageDecode, std::string("jpeg header: ") + error);
        }
        return dims;
    }
    throw Error(ErrorCode::ImageDecode, "unrecognised image format (expected PNG or JPEG)");
}

RgbImage decode_image(std::span<const std::uint8_t> bytes, std::size_t max_pixels) {
    RgbImage img;
    if (is_png(bytes)) {
        PngReader reader(bytes);
        img.dims = reader.dims();
        if (max_pixels != 0 && img.dims.area() > max_pixels) {
            throw Error(ErrorCode::ImageTooLarge, "image exceeds the pixel limit");
        }
        img.rgb = reader.finish(PNG_FORMAT_RGB);
        return img;
    }
    if (is_jpeg(bytes)) {
        char error[JMSG_LENGTH_MAX] = {};
        bool too_large = false;
        if (!jpeg_decode_raw(bytes, false, max_pixels, img.dims, alloc_vector, &img.rgb, error,
                             too_large)) {
            if (too_large) {
                throw Error(ErrorCode::ImageTooLarge, "image exceeds the pixel limit");
            }
            throw Error(ErrorCode::ImageDecode, std::string("jpeg: ") + error);
        }
        return img;
    }
    throw Error(ErrorCode::ImageDecode, "unrecognised image format (expected PNG or JPEG)");
}

GrayImage decode_gray_png(std::span<const std::uint8_t> bytes) {
    if (!is_png(bytes)) {
        throw Error(ErrorCode::ImageDecode, "not a PNG");
    }
    PngReader reader(bytes);
    GrayImage img{reader.dims(), {}};
    img.pixels = reader.finish(PNG_FORMAT_GRAY);
    return img;
}

Bytes encode_rgb_png(const RgbImage& image) {
    return encode_png(image.rgb.data(), image.dims, PNG_FORMAT_RGB);
}

Bytes encode_gray_png(const GrayImage& image) {
    return encode_png(image.pixels.data(), image.dims, PNG_FORMAT_GRAY);
}

PixelMask decode_mask_png(std::span<const std::uint8_t> bytes) {
    GrayImage g = decode_gray_png(bytes);
    return PixelMask(g.dims, g.pixels);
}

Bytes encode_mask_png(const PixelMask& mask) {
    GrayImage g{mask.dims(), std::vector<std::uint8_t>(mask.size())};
    const auto bits = mask.bytes();
    for (std::size_t i = 0; i < bits.size(); ++i) {
        g.pixels[i] = bits[i] ? 255 : 0;
    }
    return encode_gray_png(g);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) {
        throw Error(ErrorCode::ProtocolError, "base64 length is not a multiple of 4");
    }
    Bytes out(3 * (text.size() / 4));
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) {
        throw Error(ErrorCode::ProtocolError, "malformed base64");
    }
    // EVP_DecodeBlock keeps the bytes produced by '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=') {
        pad = (text.size() >= 2 && text[text.size() - 2] == '=') ? 2 : 1;
    }
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(ErrorCode::Io, "cannot write " + path.string());
    }
}

void write_file(const std::filesystem::path& path, std::string_view text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace contourseg
