// SPDX-License-Identifier: Apache-2.0
#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>

#include "onedatum/core/binio.hpp"
#include "onedatum/core/image.hpp"

namespace onedatum::img {

namespace {

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* in, std::size_t len,
                                       std::size_t size_hint) {
  std::vector<std::uint8_t> out;
  out.reserve(size_hint);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) throw IoError("inflateInit failed");
  zs.next_in = const_cast<Bytef*>(in);
  zs.avail_in = static_cast<uInt>(len);
  std::uint8_t buf[65536];
  int ret = Z_OK;
  do {
    zs.next_out = buf;
    zs.avail_out = sizeof(buf);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IoError("corrupt deflate stream");
    }
    out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
  } while (ret != Z_STREAM_END && zs.avail_in > 0);
  inflateEnd(&zs);
  if (ret != Z_STREAM_END) throw IoError("truncated deflate stream");
  return out;
}

std::vector<std::uint8_t> zlib_deflate(const std::uint8_t* in,
                                       std::size_t len) {
  uLongf bound = compressBound(static_cast<uLong>(len));
  std::vector<std::uint8_t> out(bound);
  if (compress2(out.data(), &bound, in, static_cast<uLong>(len), 6) != Z_OK) {
    throw IoError("deflate failed");
  }
  out.resize(bound);
  return out;
}

std::uint32_t be32(const std::uint8_t* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) |
         (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

std::uint32_t crc_of(const std::uint8_t* p, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

inline int paeth(int a, int b, int c) {
  int p = a + b - c;
  int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageU8 decode_png(const std::uint8_t* bytes, std::size_t len) {
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                      '\n'};
  if (len < 8 || std::memcmp(bytes, sig, 8) != 0) {
    throw IoError("not a PNG file");
  }
  std::size_t pos = 8;
  std::uint32_t w = 0, h = 0;
  int bit_depth = 0, color_type = -1, interlace = 0;
  std::vector<std::uint8_t> idat;
  std::vector<std::uint8_t> palette;  // rgb triples
  while (pos + 12 <= len) {
    std::uint32_t clen = be32(bytes + pos);
    const char* ctype = reinterpret_cast<const char*>(bytes + pos + 4);
    const std::uint8_t* cdata = bytes + pos + 8;
    if (pos + 12 + clen > len) throw IoError("truncated PNG chunk");
    if (std::memcmp(ctype, "IHDR", 4) == 0) {
      if (clen != 13) throw IoError("bad IHDR");
      w = be32(cdata);
      h = be32(cdata + 4);
      bit_depth = cdata[8];
      color_type = cdata[9];
      interlace = cdata[12];
    } else if (std::memcmp(ctype, "PLTE", 4) == 0) {
      palette.assign(cdata, cdata + clen);
    } else if (std::memcmp(ctype, "IDAT", 4) == 0) {
      idat.insert(idat.end(), cdata, cdata + clen);
    } else if (std::memcmp(ctype, "IEND", 4) == 0) {
      break;
    }
    pos += 12 + clen;
  }
  if (w == 0 || h == 0) throw IoError("PNG missing IHDR");
  if (bit_depth != 8) throw IoError("only 8-bit PNG supported");
  if (interlace != 0) throw IoError("interlaced PNG not supported");
  int nch;
  switch (color_type) {
    case 0: nch = 1; break;
    case 2: nch = 3; break;
    case 3: nch = 1; break;
    case 4: nch = 2; break;
    case 6: nch = 4; break;
    default: throw IoError("unsupported PNG color type");
  }
  std::size_t stride = static_cast<std::size_t>(w) * nch;
  auto raw = zlib_inflate(idat.data(), idat.size(), (stride + 1) * h);
  if (raw.size() < (stride + 1) * h) throw IoError("PNG data too short");

  std::vector<std::uint8_t> pix(stride * h);
  std::vector<std::uint8_t> prev(stride, 0);
  for (std::uint32_t y = 0; y < h; ++y) {
    const std::uint8_t* src = &raw[(stride + 1) * y];
    std::uint8_t filter = src[0];
    std::uint8_t* dst = &pix[stride * y];
    for (std::size_t i = 0; i < stride; ++i) {
      int x = src[1 + i];
      int a = i >= static_cast<std::size_t>(nch) ? dst[i - nch] : 0;
      int b = prev[i];
      int c = i >= static_cast<std::size_t>(nch) ? prev[i - nch] : 0;
      int v;
      switch (filter) {
        case 0: v = x; break;
        case 1: v = x + a; break;
        case 2: v = x + b; break;
        case 3: v = x + (a + b) / 2; break;
        case 4: v = x + paeth(a, b, c); break;
        default: throw IoError("bad PNG filter type");
      }
      dst[i] = static_cast<std::uint8_t>(v & 0xff);
    }
    std::memcpy(prev.data(), dst, stride);
  }

  if (color_type == 3) {
    if (palette.empty()) throw IoError("paletted PNG without PLTE");
    ImageU8 out(static_cast<int>(h), static_cast<int>(w), 3);
    for (std::size_t i = 0; i < pix.size(); ++i) {
      std::size_t pi = static_cast<std::size_t>(pix[i]) * 3;
      if (pi + 2 >= palette.size()) throw IoError("palette index out of range");
      out.data[i * 3 + 0] = palette[pi + 0];
      out.data[i * 3 + 1] = palette[pi + 1];
      out.data[i * 3 + 2] = palette[pi + 2];
    }
    return out;
  }
  ImageU8 out(static_cast<int>(h), static_cast<int>(w), nch);
  out.data = std::move(pix);
  return out;
}

ImageU8 decode_ppm(const std::uint8_t* bytes, std::size_t len) {
  std::size_t pos = 0;
  auto token = [&]() -> std::string {
    // skip whitespace and comments
    while (pos < len) {
      if (bytes[pos] == '#') {
        while (pos < len && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < len && !std::isspace(bytes[pos])) {
      t.push_back(static_cast<char>(bytes[pos++]));
    }
    return t;
  };
  std::string magic = token();
  int nch = magic == "P6" ? 3 : (magic == "P5" ? 1 : 0);
  if (nch == 0) throw IoError("unsupported PNM magic: " + magic);
  int w = std::stoi(token());
  int h = std::stoi(token());
  int maxval = std::stoi(token());
  if (maxval != 255) throw IoError("only maxval 255 PNM supported");
  ++pos;  // single whitespace after maxval
  std::size_t need = static_cast<std::size_t>(w) * h * nch;
  if (pos + need > len) throw IoError("truncated PNM payload");
  ImageU8 out(h, w, nch);
  std::memcpy(out.data.data(), bytes + pos, need);
  return out;
}

ImageU8 decode_bmp(const std::uint8_t* bytes, std::size_t len) {
  if (len < 54 || bytes[0] != 'B' || bytes[1] != 'M') {
    throw IoError("not a BMP file");
  }
  auto rd32 = [&](std::size_t o) {
    return static_cast<std::uint32_t>(bytes[o]) |
           (static_cast<std::uint32_t>(bytes[o + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[o + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[o + 3]) << 24);
  };
  std::uint32_t data_off = rd32(10);
  std::int32_t w = static_cast<std::int32_t>(rd32(18));
  std::int32_t h = static_cast<std::int32_t>(rd32(22));
  std::uint16_t bpp = static_cast<std::uint16_t>(bytes[28] | (bytes[29] << 8));
  std::uint32_t compression = rd32(30);
  if (compression != 0 || (bpp != 24 && bpp != 32)) {
    throw IoError("only uncompressed 24/32-bit BMP supported");
  }
  bool top_down = h < 0;
  int hh = std::abs(h);
  int bytes_pp = bpp / 8;
  std::size_t row = (static_cast<std::size_t>(w) * bytes_pp + 3) & ~3ull;
  if (data_off + row * hh > len) throw IoError("truncated BMP payload");
  ImageU8 out(hh, w, 3);
  for (int y = 0; y < hh; ++y) {
    int sy = top_down ? y : hh - 1 - y;
    const std::uint8_t* src = bytes + data_off + row * sy;
    for (int x = 0; x < w; ++x) {
      out.at(y, x, 2) = src[x * bytes_pp + 0];  // BGR order on disk
      out.at(y, x, 1) = src[x * bytes_pp + 1];
      out.at(y, x, 0) = src[x * bytes_pp + 2];
    }
  }
  return out;
}

}  // namespace

ImageU8 decode_image(const std::uint8_t* bytes, std::size_t len) {
  if (len >= 8 && bytes[0] == 0x89 && bytes[1] == 'P') {
    return decode_png(bytes, len);
  }
  if (len >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_ppm(bytes, len);
  }
  if (len >= 2 && bytes[0] == 'B' && bytes[1] == 'M') {
    return decode_bmp(bytes, len);
  }
  throw IoError("unrecognized image container (PNG, PPM/PGM, BMP supported)");
}

ImageU8 decode_image_file(const std::string& path) {
  auto bytes = binio::read_file(path);
  try {
    return decode_image(bytes.data(), bytes.size());
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

void encode_ppm(const ImageU8& rgb, const std::string& path) {
  if (rgb.channels != 3) throw ConfigError("encode_ppm expects RGB");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  os << "P6\n" << rgb.width << " " << rgb.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(rgb.data.data()),
           static_cast<std::streamsize>(rgb.data.size()));
  if (!os) throw IoError("failed writing: " + path);
}

void encode_png(const ImageU8& im, const std::string& path) {
  int color_type;
  switch (im.channels) {
    case 1: color_type = 0; break;
    case 3: color_type = 2; break;
    case 4: color_type = 6; break;
    default: throw ConfigError("encode_png: unsupported channel count");
  }
  std::size_t stride = static_cast<std::size_t>(im.width) * im.channels;
  std::vector<std::uint8_t> raw((stride + 1) * im.height);
  for (int y = 0; y < im.height; ++y) {
    raw[(stride + 1) * y] = 0;  // filter: none
    std::memcpy(&raw[(stride + 1) * y + 1], &im.data[stride * y], stride);
  }
  auto compressed = zlib_deflate(raw.data(), raw.size());

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for write: " + path);
  static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a,
                                      '\n'};
  os.write(reinterpret_cast<const char*>(sig), 8);
  auto chunk = [&](const char* type, const std::uint8_t* data,
                   std::size_t n) {
    std::vector<std::uint8_t> body(4 + n);
    std::memcpy(body.data(), type, 4);
    if (n > 0) std::memcpy(body.data() + 4, data, n);
    std::uint8_t hdr[4] = {static_cast<std::uint8_t>((n >> 24) & 0xff),
                           static_cast<std::uint8_t>((n >> 16) & 0xff),
                           static_cast<std::uint8_t>((n >> 8) & 0xff),
                           static_cast<std::uint8_t>(n & 0xff)};
    os.write(reinterpret_cast<const char*>(hdr), 4);
    os.write(reinterpret_cast<const char*>(body.data()),
             static_cast<std::streamsize>(body.size()));
    std::uint32_t crc = crc_of(body.data(), body.size());
    std::uint8_t cb[4] = {static_cast<std::uint8_t>((crc >> 24) & 0xff),
                          static_cast<std::uint8_t>((crc >> 16) & 0xff),
                          static_cast<std::uint8_t>((crc >> 8) & 0xff),
                          static_cast<std::uint8_t>(crc & 0xff)};
    os.write(reinterpret_cast<const char*>(cb), 4);
  };
  std::uint8_t ihdr[13] = {
      static_cast<std::uint8_t>((im.width >> 24) & 0xff),
      static_cast<std::uint8_t>((im.width >> 16) & 0xff),
      static_cast<std::uint8_t>((im.width >> 8) & 0xff),
      static_cast<std::uint8_t>(im.width & 0xff),
      static_cast<std::uint8_t>((im.height >> 24) & 0xff),
      static_cast<std::uint8_t>((im.height >> 16) & 0xff),
      static_cast<std::uint8_t>((im.height >> 8) & 0xff),
      static_cast<std::uint8_t>(im.height & 0xff),
      8,  // bit depth
      static_cast<std::uint8_t>(color_type),
      0, 0, 0};
  chunk("IHDR", ihdr, 13);
  chunk("IDAT", compressed.data(), compressed.size());
  chunk("IEND", nullptr, 0);
  if (!os) throw IoError("failed writing: " + path);
}

}  // namespace onedatum::img
