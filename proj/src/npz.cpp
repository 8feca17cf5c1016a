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

#include <cctype>
#include <charconv>
#include <cstring>

#include "ckptleak/checkpoint.hpp"
#include "ckptleak/zip.hpp"

namespace ckptleak {
namespace {

constexpr std::string_view kNpyMagic = "\x93NUMPY";
constexpr std::string_view kNpySuffix = ".npy";

std::string_view descr_for(DType d) {
  switch (d) {
    case DType::F32: return "<f4";
    case DType::F64: return "<f8";
    case DType::U8: return "|u1";
    case DType::I64: return "<i8";
  }
  return "";
}

[[noreturn]] void bad_header(const std::string& what) {
  throw Error(Errc::MalformedHeader, "npy header: " + what);
}

// Parser for the Python-literal dictionary numpy writes in NPY headers,
// restricted to the three keys we need.
class HeaderParser {
 public:
  explicit HeaderParser(std::string_view text) : s_(text) {}

  void parse(std::string& descr, bool& fortran, std::vector<std::uint64_t>& shape) {
    bool have_descr = false, have_fortran = false, have_shape = false;
    expect('{');
    while (true) {
      skip_ws();
      if (peek() == '}') { ++i_; break; }
      const std::string key = string_literal();
      expect(':');
      if (key == "descr") {
        descr = string_literal();
        have_descr = true;
      } else if (key == "fortran_order") {
        fortran = boolean();
        have_fortran = true;
      } else if (key == "shape") {
        shape = tuple();
        have_shape = true;
      } else {
        bad_header("unexpected key '" + key + "'");
      }
      skip_ws();
      if (peek() == ',') { ++i_; continue; }
      expect('}');
      break;
    }
    skip_ws();
    if (i_ != s_.size()) bad_header("text after dictionary");
    if (!have_descr || !have_fortran || !have_shape) bad_header("missing descr/fortran_order/shape");
  }

 private:
  char peek() const { return i_ < s_.size() ? s_[i_] : '\0'; }
  void skip_ws() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  void expect(char c) {
    skip_ws();
    if (peek() != c) bad_header(std::string("expected '") + c + "'");
    ++i_;
  }
  std::string string_literal() {
    skip_ws();
    const char q = peek();
    if (q != '\'' && q != '"') bad_header("expected string");
    const auto end = s_.find(q, i_ + 1);
    if (end == std::string_view::npos) bad_header("unterminated string");
    std::string out(s_.substr(i_ + 1, end - i_ - 1));
    i_ = end + 1;
    return out;
  }
  bool boolean() {
    skip_ws();
    if (s_.substr(i_, 4) == "True") { i_ += 4; return true; }
    if (s_.substr(i_, 5) == "False") { i_ += 5; return false; }
    bad_header("expected True or False");
  }
  std::vector<std::uint64_t> tuple() {
    expect('(');
    std::vector<std::uint64_t> dims;
    while (true) {
      skip_ws();
      if (peek() == ')') { ++i_; break; }
      std::uint64_t v = 0;
      const char* first = s_.data() + i_;
      const char* last = s_.data() + s_.size();
      auto [ptr, ec] = std::from_chars(first, last, v);
      if (ec != std::errc() || ptr == first) bad_header("bad shape dimension");
      i_ += static_cast<std::size_t>(ptr - first);
      if (peek() == 'L') ++i_;  // python 2 longs
      dims.push_back(v);
      if (dims.size() > 255) bad_header("too many dimensions");
      skip_ws();
      if (peek() == ',') { ++i_; continue; }
      expect(')');
      break;
    }
    return dims;
  }

  std::string_view s_;
  std::size_t i_ = 0;
};

}  // namespace

Bytes serialize_npy(const TensorEntry& e) {
  validate_entry(e);
  std::string dict = "{'descr': '" + std::string(descr_for(e.dtype)) +
                     "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < e.shape.size(); ++i) {
    if (i) dict += ", ";
    dict += std::to_string(e.shape[i]);
  }
  if (e.shape.size() == 1) dict += ",";
  dict += "), }";
  // pad with spaces so the payload starts on a 64-byte boundary, then '\n'
  const std::size_t preamble = kNpyMagic.size() + 2 + 2;
  std::size_t total = preamble + dict.size() + 1;
  total = (total + 63) / 64 * 64;
  dict.append(total - preamble - dict.size() - 1, ' ');
  dict += '\n';
  if (dict.size() > 0xFFFF) throw Error(Errc::LengthOverflow, "npy header too long for v1.0");

  Bytes out;
  ByteWriter w(out);
  w.raw(kNpyMagic);
  w.u8(1);
  w.u8(0);
  w.u16(static_cast<std::uint16_t>(dict.size()));
  w.raw(dict);
  w.raw(e.payload);
  return out;
}

TensorEntry parse_npy(std::string key, ByteSpan data) {
  ByteReader r(data, "npy");
  r.expect_magic(kNpyMagic);
  const std::uint8_t major = r.u8();
  const std::uint8_t minor = r.u8();
  if (major != 1 || minor != 0)
    throw Error(Errc::UnsupportedVersion,
                "npy version " + std::to_string(major) + "." + std::to_string(minor));
  const std::uint16_t header_len = r.u16();
  const std::string header = r.take_string(header_len);

  std::string descr;
  bool fortran = false;
  std::vector<std::uint64_t> shape;
  HeaderParser(header).parse(descr, fortran, shape);

  std::optional<DType> dtype;
  for (auto d : {DType::F32, DType::F64, DType::U8, DType::I64})
    if (descr == descr_for(d)) dtype = d;
  if (!dtype) throw Error(Errc::UnsupportedDescr, "npy descr '" + descr + "'");
  if (fortran) throw Error(Errc::UnsupportedLayout, "fortran_order True is not supported");

  const std::uint64_t expected = shape_elements(shape, *dtype) * dtype_width(*dtype);
  if (r.remaining() != expected)
    throw Error(Errc::ShapeMismatch, "npy '" + key + "' payload is " +
                                         std::to_string(r.remaining()) + " bytes, shape needs " +
                                         std::to_string(expected));
  const ByteSpan body = r.take(expected);
  return make_entry(std::move(key), *dtype, std::move(shape), Bytes(body.begin(), body.end()));
}

Bytes serialize_npz(const Checkpoint& c, bool compressed) {
  std::vector<ZipMember> members;
  members.reserve(c.size());
  for (const auto& e : c.entries()) members.push_back({e.key + std::string(kNpySuffix), serialize_npy(e)});
  return write_zip(members, compressed ? ZipMethod::Deflate : ZipMethod::Stored);
}

Checkpoint parse_npz(ByteSpan data) {
  Checkpoint c(ContainerFormat::NPZ);
  for (auto& m : read_zip(data)) {
    if (m.name.size() <= kNpySuffix.size() || !m.name.ends_with(kNpySuffix))
      throw Error(Errc::InvalidKey, "zip member '" + m.name + "' is not an .npy file");
    std::string key = m.name.substr(0, m.name.size() - kNpySuffix.size());
    if (c.contains(key)) throw Error(Errc::DuplicateKey, "duplicate member '" + m.name + "'");
    c.add(parse_npy(std::move(key), m.data));
  }
  return c;
}

std::uint64_t write_npz(const Checkpoint& c, const std::filesystem::path& path, bool compressed) {
  const Bytes bytes = serialize_npz(c, compressed);
  write_file(path, bytes);
  return bytes.size();
}

Checkpoint read_npz(const std::filesystem::path& path) { return parse_npz(read_file(path)); }

}  // namespace ckptleak
