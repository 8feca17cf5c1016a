/*
 * Copyright 2026 The ckptleak Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ckptleak/compress.hpp"

#include <zlib.h>

#include <algorithm>
#include <limits>

namespace ckptleak {

Bytes deflate_raw(ByteSpan input, int level) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, -MAX_WBITS, 9, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(Errc::InvalidArgument, "deflateInit2 failed");
  Bytes out(deflateBound(&zs, static_cast<uLong>(input.size())));
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  const auto produced = zs.total_out;
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::InvalidArgument, "deflate did not finish");
  out.resize(produced);
  return out;
}

Bytes inflate_raw(ByteSpan input, std::uint64_t max_output) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK)
    throw Error(Errc::DecompressionError, "inflateInit2 failed");
  Bytes out;
  std::uint8_t chunk[16384];
  zs.next_in = const_cast<Bytef*>(input.data());
  zs.avail_in = static_cast<uInt>(input.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw Error(Errc::DecompressionError,
                  std::string("inflate: ") + (zs.msg ? zs.msg : "stream error"));
    }
    const std::size_t got = sizeof(chunk) - zs.avail_out;
    if (out.size() + got > max_output) {
      inflateEnd(&zs);
      throw Error(Errc::DecompressionError, "inflated data exceeds declared size");
    }
    out.insert(out.end(), chunk, chunk + got);
    if (rc == Z_OK && zs.avail_in == 0 && got == 0) {
      inflateEnd(&zs);
      throw Error(Errc::DecompressionError, "deflate stream ends prematurely");
    }
  }
  const bool trailing = zs.avail_in != 0;
  inflateEnd(&zs);
  if (trailing) throw Error(Errc::DecompressionError, "bytes after end of deflate stream");
  return out;
}

std::uint32_t crc32(ByteSpan data, std::uint32_t seed) {
  uLong crc = seed;
  // zlib takes uInt lengths; feed in slices for payloads over 4 GiB.
  std::size_t off = 0;
  while (off < data.size()) {
    const std::size_t n = std::min<std::size_t>(data.size() - off, 1u << 30);
    crc = ::crc32(crc, data.data() + off, static_cast<uInt>(n));
    off += n;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace ckptleak
