#include "orchard/imageio.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <jpeglib.h>
#include <png.h>

namespace orchard {

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec) || ec)
    fail(Errc::file_not_found, path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::file_not_found, path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

bool is_png(const std::vector<std::uint8_t>& b) {
  static const std::uint8_t sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
  return b.size() >= 8 && std::memcmp(b.data(), sig, 8) == 0;
}

bool is_jpeg(const std::vector<std::uint8_t>& b) {
  return b.size() >= 2 && b[0] == 0xFF && b[1] == 0xD8;
}

ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&im, bytes.data(), bytes.size()))
    fail(Errc::corrupt_image, name + ": " + im.message);
  im.format = PNG_FORMAT_RGB;
  ImageU8 out(static_cast<int>(im.width), static_cast<int>(im.height), Colorspace::rgb8);
  if (!png_image_finish_read(&im, nullptr, out.data.data(), 0, nullptr)) {
    std::string msg = im.message;
    png_image_free(&im);
    fail(Errc::corrupt_image, name + ": " + msg);
  }
  return out;
}

struct JpegErrorTrap {
  jpeg_error_mgr mgr;
  jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* trap = reinterpret_cast<JpegErrorTrap*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, trap->message);
  longjmp(trap->jump, 1);
}

ImageU8 decode_jpeg(const std::vector<std::uint8_t>& bytes, const std::string& name) {
  jpeg_decompress_struct cinfo;
  JpegErrorTrap trap;
  cinfo.err = jpeg_std_error(&trap.mgr);
  trap.mgr.error_exit = jpeg_error_exit;
  ImageU8 out;
  if (setjmp(trap.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(Errc::corrupt_image, name + ": " + trap.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out = ImageU8(static_cast<int>(cinfo.output_width),
                static_cast<int>(cinfo.output_height), Colorspace::rgb8);
  const std::size_t stride = static_cast<std::size_t>(out.width) * 3;
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data.data() + cinfo.output_scanline * stride;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

// Row pointers must be fully prepared by the caller; nothing with a
// destructor lives between setjmp and the longjmp it guards.
void write_png_raw(const std::filesystem::path& path, png_uint_32 width,
                   png_uint_32 height, int bit_depth, int color_type,
                   const std::vector<png_bytep>& rows) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) fail(Errc::io_error, "cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(Errc::io_error, "png writer allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(Errc::io_error, "png write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth < 8) png_set_packing(png);
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

ImageU8 load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (is_png(bytes)) return decode_png(bytes, path.string());
  if (is_jpeg(bytes)) return decode_jpeg(bytes, path.string());
  fail(Errc::unsupported_format, path.string() + " is neither PNG nor JPEG");
}

void save_png(const ImageU8& img, const std::filesystem::path& path) {
  if (img.space != Colorspace::rgb8)
    fail(Errc::wrong_colorspace, "save_png expects rgb8");
  std::vector<png_bytep> rows(img.height);
  const std::size_t stride = static_cast<std::size_t>(img.width) * 3;
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.data.data() + y * stride);
  write_png_raw(path, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void save_gray_png(const PlaneXd& plane, const std::filesystem::path& path) {
  const int h = static_cast<int>(plane.rows());
  const int w = static_cast<int>(plane.cols());
  const double lo = plane.minCoeff();
  const double hi = plane.maxCoeff();
  const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      buf[static_cast<std::size_t>(y) * w + x] =
          scale > 0.0
              ? static_cast<std::uint8_t>(std::lround((plane(y, x) - lo) * scale))
              : 128;
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
  write_png_raw(path, w, h, 8, PNG_COLOR_TYPE_GRAY, rows);
}

void save_mask_png(const MaskXb& mask, const std::filesystem::path& path) {
  const int h = static_cast<int>(mask.rows());
  const int w = static_cast<int>(mask.cols());
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      buf[static_cast<std::size_t>(y) * w + x] = mask(y, x) ? 1 : 0;
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * w;
  write_png_raw(path, w, h, 1, PNG_COLOR_TYPE_GRAY, rows);
}

MaskXb load_mask_png(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_png(bytes))
    fail(Errc::unsupported_format, "mask must be a PNG: " + path.string());
  png_image im;
  std::memset(&im, 0, sizeof(im));
  im.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&im, bytes.data(), bytes.size()))
    fail(Errc::corrupt_image, path.string() + ": " + im.message);
  im.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(im));
  if (!png_image_finish_read(&im, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = im.message;
    png_image_free(&im);
    fail(Errc::corrupt_image, path.string() + ": " + msg);
  }
  MaskXb mask(im.height, im.width);
  for (png_uint_32 y = 0; y < im.height; ++y)
    for (png_uint_32 x = 0; x < im.width; ++x)
      mask(y, x) = buf[static_cast<std::size_t>(y) * im.width + x] != 0;
  return mask;
}

}  // namespace orchard
