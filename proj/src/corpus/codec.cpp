#include "veilmod/corpus/codec.hpp"

#include <atomic>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <jpeglib.h>
#include <png.h>
#include <unistd.h>

#include "veilmod/error.hpp"

namespace veilmod::corpus {

namespace fs = std::filesystem;

ImageFormat detect_format(std::span<const std::uint8_t> data) {
    static constexpr std::uint8_t png_magic[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (data.size() >= sizeof png_magic && std::memcmp(data.data(), png_magic, sizeof png_magic) == 0)
        return ImageFormat::png;
    if (data.size() >= 3 && data[0] == 0xFF && data[1] == 0xD8 && data[2] == 0xFF)
        return ImageFormat::jpeg;
    throw Error(ErrorKind::schema, "unrecognized image encoding (expected PNG or JPEG)");
}

namespace {

blur::RasterImage decode_png(std::span<const std::uint8_t> data) {
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&png, data.data(), data.size()))
        throw Error(ErrorKind::schema, fmt::format("PNG header unreadable: {}", png.message));

    const bool alpha = (png.format & PNG_FORMAT_FLAG_ALPHA) != 0;
    png.format = alpha ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;
    blur::RasterImage img{static_cast<int>(png.width), static_cast<int>(png.height), alpha ? 4 : 3, {}};
    img.pixels.resize(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
        std::string msg = png.message;
        png_image_free(&png);
        throw Error(ErrorKind::schema, fmt::format("PNG decode failed: {}", msg));
    }
    return img;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

// Kept free of objects with destructors so longjmp out of libjpeg is safe.
bool decode_jpeg_raw(std::span<const std::uint8_t> data, blur::RasterImage& img, char* message) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::memcpy(message, err.message, JMSG_LENGTH_MAX);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);

    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = 3;
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

bool encode_jpeg_raw(const blur::RasterImage& image, int quality, unsigned char** out, unsigned long* size,
                     const std::uint8_t* rgb, char* message) {
    jpeg_compress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    if (setjmp(err.jump)) {
        std::memcpy(message, err.message, JMSG_LENGTH_MAX);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, out, size);
    cinfo.image_width = static_cast<JDIMENSION>(image.width);
    cinfo.image_height = static_cast<JDIMENSION>(image.height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        auto row = const_cast<JSAMPROW>(rgb + static_cast<std::size_t>(cinfo.next_scanline) * image.width * 3);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

} // namespace

blur::RasterImage decode_image(std::span<const std::uint8_t> data) {
    if (detect_format(data) == ImageFormat::png)
        return decode_png(data);

    blur::RasterImage img;
    char message[JMSG_LENGTH_MAX] = {};
    if (!decode_jpeg_raw(data, img, message))
        throw Error(ErrorKind::schema, fmt::format("JPEG decode failed: {}", message));
    return img;
}

blur::RasterImage decode_image_file(const fs::path& path) {
    const Bytes data = read_file(path);
    try {
        return decode_image(data);
    } catch (const Error& e) {
        throw Error(e.kind(), fmt::format("{}: {}", path.string(), e.what()));
    }
}

Bytes encode_png(const blur::RasterImage& image) {
    blur::check_raster(image);
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = image.has_alpha() ? PNG_FORMAT_RGBA : PNG_FORMAT_RGB;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr))
        throw Error(ErrorKind::io, fmt::format("PNG encode failed: {}", png.message));
    Bytes out(size);
    if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr))
        throw Error(ErrorKind::io, fmt::format("PNG encode failed: {}", png.message));
    out.resize(size);
    return out;
}

Bytes encode_jpeg(const blur::RasterImage& image, int quality) {
    blur::check_raster(image);
    if (quality < 1 || quality > 100)
        throw Error(ErrorKind::invalid_parameter, fmt::format("JPEG quality must be 1..100, got {}", quality));

    Bytes rgb_storage;
    const std::uint8_t* rgb = image.pixels.data();
    if (image.has_alpha()) {
        rgb_storage.reserve(static_cast<std::size_t>(image.width) * image.height * 3);
        for (std::size_t p = 0; p < image.pixels.size(); p += 4)
            rgb_storage.insert(rgb_storage.end(), image.pixels.begin() + p, image.pixels.begin() + p + 3);
        rgb = rgb_storage.data();
    }

    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    char message[JMSG_LENGTH_MAX] = {};
    const bool ok = encode_jpeg_raw(image, quality, &buffer, &size, rgb, message);
    Bytes out;
    if (ok)
        out.assign(buffer, buffer + size);
    std::free(buffer);
    if (!ok)
        throw Error(ErrorKind::io, fmt::format("JPEG encode failed: {}", message));
    return out;
}

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
    Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad())
        throw Error(ErrorKind::io, fmt::format("read error on {}", path.string()));
    return data;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> data) {
    std::error_code ec;
    if (path.has_parent_path())
        fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    static std::atomic<unsigned> counter{0};
    tmp += fmt::format(".tmp.{}.{}", ::getpid(), counter++);
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error(ErrorKind::io, fmt::format("cannot write {}", tmp.string()));
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
        if (!out)
            throw Error(ErrorKind::io, fmt::format("write error on {}", tmp.string()));
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorKind::io, fmt::format("cannot move {} into place", path.string()));
    }
}

} // namespace veilmod::corpus
