#include "dielink/imaging/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <jpeglib.h>
#include <png.h>
#include <tiffio.h>

#include "dielink/errors.hpp"

namespace dielink::imaging {

ImageFormat sniff_format(std::span<const std::uint8_t> b) noexcept {
    if (b.size() >= 8 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G') return ImageFormat::Png;
    if (b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF) return ImageFormat::Jpeg;
    if (b.size() >= 4 && ((b[0] == 'I' && b[1] == 'I' && b[2] == 42 && b[3] == 0) ||
                          (b[0] == 'M' && b[1] == 'M' && b[2] == 0 && b[3] == 42)))
        return ImageFormat::Tiff;
    return ImageFormat::Unknown;
}

float luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    if (r == g && g == b) return static_cast<float>(r / 255.0);
    const double y = kLumaR * r + kLumaG * g + kLumaB * b;
    return static_cast<float>(std::clamp(y / 255.0, 0.0, 1.0));
}

namespace {

// rgba is interleaved 8-bit; alpha composites onto black.
GrayImage from_rgba(int w, int h, const std::uint8_t* rgba) {
    GrayImage img(w, h);
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const std::uint8_t* p = rgba + 4 * i;
        float v = luma(p[0], p[1], p[2]);
        if (p[3] != 255) v = static_cast<float>(v * (p[3] / 255.0));
        px[i] = v;
    }
    return img;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw DecodeError(std::string("png: ") + image.message);
    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw DecodeError("png: " + msg);
    }
    if (image.width == 0 || image.height == 0) throw DecodeError("png: empty image");
    return from_rgba(static_cast<int>(image.width), static_cast<int>(image.height), buf.data());
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

void jpeg_silent(j_common_ptr, int) {}

GrayImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit;
    jerr.base.emit_message = jpeg_silent;
    jerr.message[0] = '\0';

    // Everything touched after setjmp lives outside this frame's destructors.
    std::vector<std::uint8_t> rgba;
    std::vector<std::uint8_t> line;
    int w = 0;
    int h = 0;
    if (setjmp(jerr.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DecodeError(std::string("jpeg: ") + jerr.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    const bool gray = cinfo.num_components == 1;
    cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    w = static_cast<int>(cinfo.output_width);
    h = static_cast<int>(cinfo.output_height);
    const int comps = cinfo.output_components;
    rgba.resize(static_cast<std::size_t>(w) * h * 4);
    line.resize(static_cast<std::size_t>(w) * comps);
    while (cinfo.output_scanline < cinfo.output_height) {
        const int y = static_cast<int>(cinfo.output_scanline);
        JSAMPROW row = line.data();
        jpeg_read_scanlines(&cinfo, &row, 1);
        std::uint8_t* dst = rgba.data() + static_cast<std::size_t>(y) * w * 4;
        for (int x = 0; x < w; ++x) {
            if (comps == 1) {
                dst[4 * x] = dst[4 * x + 1] = dst[4 * x + 2] = line[x];
            } else {
                dst[4 * x] = line[comps * x];
                dst[4 * x + 1] = line[comps * x + 1];
                dst[4 * x + 2] = line[comps * x + 2];
            }
            dst[4 * x + 3] = 255;
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    if (w == 0 || h == 0) throw DecodeError("jpeg: empty image");
    return from_rgba(w, h, rgba.data());
}

struct MemoryStream {
    std::span<const std::uint8_t> in;
    std::vector<std::uint8_t>* out = nullptr;
    toff_t pos = 0;
};

tsize_t mem_read(thandle_t h, tdata_t buf, tsize_t n) {
    auto* s = static_cast<MemoryStream*>(h);
    const std::size_t avail = s->in.size() > s->pos ? s->in.size() - s->pos : 0;
    const std::size_t take = std::min<std::size_t>(avail, static_cast<std::size_t>(n));
    std::memcpy(buf, s->in.data() + s->pos, take);
    s->pos += take;
    return static_cast<tsize_t>(take);
}

tsize_t mem_write(thandle_t h, tdata_t buf, tsize_t n) {
    auto* s = static_cast<MemoryStream*>(h);
    if (!s->out) return 0;
    if (s->out->size() < s->pos + n) s->out->resize(s->pos + n);
    std::memcpy(s->out->data() + s->pos, buf, static_cast<std::size_t>(n));
    s->pos += n;
    return n;
}

toff_t mem_seek(thandle_t h, toff_t off, int whence) {
    auto* s = static_cast<MemoryStream*>(h);
    const toff_t size = s->out ? s->out->size() : s->in.size();
    switch (whence) {
        case SEEK_SET: s->pos = off; break;
        case SEEK_CUR: s->pos += off; break;
        case SEEK_END: s->pos = size + off; break;
        default: return static_cast<toff_t>(-1);
    }
    if (s->out && s->out->size() < s->pos) s->out->resize(s->pos);
    return s->pos;
}

int mem_close(thandle_t) { return 0; }

toff_t mem_size(thandle_t h) {
    auto* s = static_cast<MemoryStream*>(h);
    return s->out ? s->out->size() : s->in.size();
}

int mem_map(thandle_t, tdata_t*, toff_t*) { return 0; }
void mem_unmap(thandle_t, tdata_t, toff_t) {}

void silence_tiff() {
    static const bool once = [] {
        TIFFSetErrorHandler(nullptr);
        TIFFSetWarningHandler(nullptr);
        return true;
    }();
    (void)once;
}

GrayImage decode_tiff(std::span<const std::uint8_t> bytes) {
    silence_tiff();
    MemoryStream stream{bytes, nullptr, 0};
    TIFF* tif = TIFFClientOpen("memory", "rm", &stream, mem_read, mem_write, mem_seek, mem_close, mem_size,
                               mem_map, mem_unmap);
    if (!tif) throw DecodeError("tiff: cannot open stream");
    std::uint32_t w = 0;
    std::uint32_t h = 0;
    TIFFGetField(tif, TIFFTAG_IMAGEWIDTH, &w);
    TIFFGetField(tif, TIFFTAG_IMAGELENGTH, &h);
    if (w == 0 || h == 0) {
        TIFFClose(tif);
        throw DecodeError("tiff: empty image");
    }
    std::vector<std::uint32_t> raster(static_cast<std::size_t>(w) * h);
    const int ok = TIFFReadRGBAImageOriented(tif, w, h, raster.data(), ORIENTATION_TOPLEFT, 0);
    TIFFClose(tif);
    if (!ok) throw DecodeError("tiff: unsupported or corrupt image");
    std::vector<std::uint8_t> rgba(raster.size() * 4);
    for (std::size_t i = 0; i < raster.size(); ++i) {
        rgba[4 * i] = static_cast<std::uint8_t>(TIFFGetR(raster[i]));
        rgba[4 * i + 1] = static_cast<std::uint8_t>(TIFFGetG(raster[i]));
        rgba[4 * i + 2] = static_cast<std::uint8_t>(TIFFGetB(raster[i]));
        rgba[4 * i + 3] = static_cast<std::uint8_t>(TIFFGetA(raster[i]));
    }
    return from_rgba(static_cast<int>(w), static_cast<int>(h), rgba.data());
}

std::vector<std::uint8_t> to_bytes(const GrayImage& img) {
    std::vector<std::uint8_t> out(img.size());
    auto px = img.pixels();
    for (std::size_t i = 0; i < px.size(); ++i)
        out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(px[i], 0.0f, 1.0f) * 255.0f));
    return out;
}

}  // namespace

GrayImage load_image(std::span<const std::uint8_t> bytes) {
    switch (sniff_format(bytes)) {
        case ImageFormat::Png: return decode_png(bytes);
        case ImageFormat::Jpeg: return decode_jpeg(bytes);
        case ImageFormat::Tiff: return decode_tiff(bytes);
        case ImageFormat::Unknown: break;
    }
    throw DecodeError("unsupported image format");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GrayImage load_image_file(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return load_image(bytes);
}

bool has_image_extension(std::string_view name) {
    const auto dot = name.rfind('.');
    if (dot == std::string_view::npos) return false;
    std::string ext(name.substr(dot + 1));
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == "png" || ext == "jpg" || ext == "jpeg" || ext == "tif" || ext == "tiff";
}

namespace {

std::vector<std::uint8_t> png_write(int w, int h, int format, const void* data) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = static_cast<png_uint_32>(format);
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr))
        throw std::runtime_error(std::string("png encode: ") + image.message);
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr))
        throw std::runtime_error(std::string("png encode: ") + image.message);
    out.resize(size);
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    const auto bytes = to_bytes(img);
    return png_write(img.width(), img.height(), PNG_FORMAT_GRAY, bytes.data());
}

std::vector<std::uint8_t> encode_png_rgb(int width, int height, std::span<const std::uint8_t> rgb) {
    if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw std::invalid_argument("encode_png_rgb: size mismatch");
    return png_write(width, height, PNG_FORMAT_RGB, rgb.data());
}

std::vector<std::uint8_t> encode_tiff(const GrayImage& img) {
    silence_tiff();
    std::vector<std::uint8_t> out;
    MemoryStream stream{{}, &out, 0};
    TIFF* tif = TIFFClientOpen("memory", "w", &stream, mem_read, mem_write, mem_seek, mem_close, mem_size,
                               mem_map, mem_unmap);
    if (!tif) throw std::runtime_error("tiff encode: cannot open stream");
    TIFFSetField(tif, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(img.width()));
    TIFFSetField(tif, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(img.height()));
    TIFFSetField(tif, TIFFTAG_SAMPLESPERPIXEL, 1);
    TIFFSetField(tif, TIFFTAG_BITSPERSAMPLE, 8);
    TIFFSetField(tif, TIFFTAG_PHOTOMETRIC, PHOTOMETRIC_MINISBLACK);
    TIFFSetField(tif, TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif, TIFFTAG_COMPRESSION, COMPRESSION_NONE);
    TIFFSetField(tif, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(img.height()));
    auto bytes = to_bytes(img);
    for (int y = 0; y < img.height(); ++y) {
        if (TIFFWriteScanline(tif, bytes.data() + static_cast<std::size_t>(y) * img.width(),
                              static_cast<std::uint32_t>(y), 0) < 0) {
            TIFFClose(tif);
            throw std::runtime_error("tiff encode: write failed");
        }
    }
    TIFFClose(tif);
    return out;
}

std::vector<std::uint8_t> encode_jpeg(const GrayImage& img, int quality) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    unsigned char* mem = nullptr;
    unsigned long mem_size = 0;
    jpeg_mem_dest(&cinfo, &mem, &mem_size);
    cinfo.image_width = static_cast<JDIMENSION>(img.width());
    cinfo.image_height = static_cast<JDIMENSION>(img.height());
    cinfo.input_components = 1;
    cinfo.in_color_space = JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    auto bytes = to_bytes(img);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = bytes.data() + static_cast<std::size_t>(cinfo.next_scanline) * img.width();
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<std::uint8_t> out(mem, mem + mem_size);
    jpeg_destroy_compress(&cinfo);
    std::free(mem);
    return out;
}

GrayImage quantize_8bit(const GrayImage& img) {
    GrayImage out(img.width(), img.height());
    const auto bytes = to_bytes(img);
    auto px = out.pixels();
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = static_cast<float>(bytes[i] / 255.0);
    return out;
}

}  // namespace dielink::imaging
