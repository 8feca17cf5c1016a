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

#include "ckptleak/zip.hpp"

#include <limits>

#include "ckptleak/compress.hpp"

namespace ckptleak {
namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEndSig = 0x06054b50;
constexpr std::size_t kLocalHeaderSize = 30;
constexpr std::size_t kCentralHeaderSize = 46;
constexpr std::size_t kEndRecordSize = 22;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;  // 1980-01-01
constexpr std::uint16_t kVersion = 20;

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::MalformedZip, what); }

std::uint32_t fits32(std::size_t n, const char* what) {
  if (n >= std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::LengthOverflow, std::string(what) + " needs ZIP64, which is unsupported");
  return static_cast<std::uint32_t>(n);
}

std::size_t find_end_record(ByteSpan archive) {
  if (archive.size() < kEndRecordSize) malformed("archive smaller than end record");
  const std::size_t last = archive.size() - kEndRecordSize;
  const std::size_t first = last > 0xFFFF ? last - 0xFFFF : 0;
  for (std::size_t pos = last + 1; pos-- > first;) {
    ByteReader r(archive.subspan(pos), "zip end record");
    if (r.u32() != kEndSig) continue;
    r.take(16);
    const std::uint16_t comment_len = r.u16();
    if (pos + kEndRecordSize + comment_len == archive.size()) return pos;
  }
  malformed("end of central directory record not found");
}

}  // namespace

Bytes write_zip(std::span<const ZipMember> members, ZipMethod method, int level) {
  Bytes out;
  ByteWriter w(out);
  Bytes central;
  ByteWriter cw(central);
  for (const auto& m : members) {
    const std::uint32_t offset = fits32(out.size(), "archive");
    const std::uint32_t crc = crc32(m.data);
    Bytes packed;
    ByteSpan body = m.data;
    if (method == ZipMethod::Deflate) {
      packed = deflate_raw(m.data, level);
      body = packed;
    }
    const std::uint32_t csize = fits32(body.size(), "member");
    const std::uint32_t usize = fits32(m.data.size(), "member");
    if (m.name.size() > 0xFFFF) throw Error(Errc::LengthOverflow, "member name too long");
    const auto name_len = static_cast<std::uint16_t>(m.name.size());

    w.u32(kLocalSig);
    w.u16(kVersion);
    w.u16(0);  // flags
    w.u16(static_cast<std::uint16_t>(method));
    w.u16(0);  // time
    w.u16(kDosDate);
    w.u32(crc);
    w.u32(csize);
    w.u32(usize);
    w.u16(name_len);
    w.u16(0);  // extra
    w.raw(m.name);
    w.raw(body);

    cw.u32(kCentralSig);
    cw.u16(kVersion);  // made by (MS-DOS)
    cw.u16(kVersion);
    cw.u16(0);
    cw.u16(static_cast<std::uint16_t>(method));
    cw.u16(0);
    cw.u16(kDosDate);
    cw.u32(crc);
    cw.u32(csize);
    cw.u32(usize);
    cw.u16(name_len);
    cw.u16(0);  // extra
    cw.u16(0);  // comment
    cw.u16(0);  // disk start
    cw.u16(0);  // internal attributes
    cw.u32(0);  // external attributes
    cw.u32(offset);
    cw.raw(m.name);
  }
  if (members.size() > 0xFFFF) throw Error(Errc::LengthOverflow, "too many zip members");
  const std::uint32_t cd_offset = fits32(out.size(), "archive");
  const std::uint32_t cd_size = fits32(central.size(), "central directory");
  w.raw(central);
  w.u32(kEndSig);
  w.u16(0);
  w.u16(0);
  w.u16(static_cast<std::uint16_t>(members.size()));
  w.u16(static_cast<std::uint16_t>(members.size()));
  w.u32(cd_size);
  w.u32(cd_offset);
  w.u16(0);
  return out;
}

std::vector<ZipMember> read_zip(ByteSpan archive) {
  const std::size_t end_pos = find_end_record(archive);
  ByteReader end(archive.subspan(end_pos), "zip end record");
  end.u32();
  const std::uint16_t disk = end.u16();
  const std::uint16_t cd_disk = end.u16();
  const std::uint16_t entries_here = end.u16();
  const std::uint16_t entries_total = end.u16();
  const std::uint32_t cd_size = end.u32();
  const std::uint32_t cd_offset = end.u32();
  if (disk != 0 || cd_disk != 0 || entries_here != entries_total)
    malformed("multi-disk archives are unsupported");
  if (cd_offset == 0xFFFFFFFFu || cd_size == 0xFFFFFFFFu || entries_total == 0xFFFF)
    malformed("ZIP64 archives are unsupported");
  if (std::uint64_t{cd_offset} + cd_size > end_pos)
    malformed("central directory overlaps end record");

  ByteReader cd(archive.subspan(cd_offset, cd_size), "zip central directory");
  std::vector<ZipMember> members;
  try {
    for (std::uint16_t i = 0; i < entries_total; ++i) {
      if (cd.u32() != kCentralSig) malformed("bad central directory signature");
      cd.u16();  // made by
      cd.u16();  // needed
      const std::uint16_t flags = cd.u16();
      const std::uint16_t method = cd.u16();
      cd.u16();
      cd.u16();
      const std::uint32_t crc = cd.u32();
      const std::uint32_t csize = cd.u32();
      const std::uint32_t usize = cd.u32();
      const std::uint16_t name_len = cd.u16();
      const std::uint16_t extra_len = cd.u16();
      const std::uint16_t comment_len = cd.u16();
      cd.u16();
      cd.u16();
      cd.u32();
      const std::uint32_t local_offset = cd.u32();
      std::string name = cd.take_string(name_len);
      cd.take(extra_len);
      cd.take(comment_len);

      if (flags & 0x1) malformed("encrypted member " + name);
      if (csize == 0xFFFFFFFFu || usize == 0xFFFFFFFFu || local_offset == 0xFFFFFFFFu)
        malformed("ZIP64 member " + name);
      if (local_offset >= cd_offset) malformed("local header inside central directory");

      ByteReader local(archive.subspan(local_offset, cd_offset - local_offset),
                       "zip local header");
      if (local.u32() != kLocalSig) malformed("bad local header signature for " + name);
      local.take(kLocalHeaderSize - 4 - 4);
      const std::uint16_t lname = local.u16();
      const std::uint16_t lextra = local.u16();
      if (local.take_string(lname) != name) malformed("local/central name mismatch for " + name);
      local.take(lextra);
      const ByteSpan body = local.take(csize);

      Bytes data;
      if (method == static_cast<std::uint16_t>(ZipMethod::Stored)) {
        if (csize != usize) malformed("stored member size mismatch for " + name);
        data.assign(body.begin(), body.end());
      } else if (method == static_cast<std::uint16_t>(ZipMethod::Deflate)) {
        data = inflate_raw(body, usize);
        if (data.size() != usize) malformed("inflated size mismatch for " + name);
      } else {
        malformed("unsupported compression method " + std::to_string(method));
      }
      if (crc32(data) != crc) throw Error(Errc::ChecksumMismatch, "crc mismatch for " + name);
      members.push_back({std::move(name), std::move(data)});
    }
  } catch (const Error& e) {
    if (e.code() == Errc::Truncated) malformed(e.what());
    throw;
  }
  return members;
}

}  // namespace ckptleak
