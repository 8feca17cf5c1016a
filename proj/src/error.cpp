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

#include "ckptleak/error.hpp"

namespace ckptleak {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::Io: return "io";
    case Errc::BadMagic: return "bad magic";
    case Errc::UnsupportedVersion: return "unsupported version";
    case Errc::Truncated: return "truncated";
    case Errc::LengthMismatch: return "length mismatch";
    case Errc::TrailingData: return "trailing data";
    case Errc::LengthOverflow: return "length overflow";
    case Errc::DuplicateKey: return "duplicate key";
    case Errc::MissingKey: return "missing key";
    case Errc::InvalidKey: return "invalid key";
    case Errc::InvalidDType: return "invalid dtype";
    case Errc::ShapeMismatch: return "shape mismatch";
    case Errc::UnsupportedDescr: return "unsupported descr";
    case Errc::UnsupportedLayout: return "unsupported layout";
    case Errc::MalformedZip: return "malformed zip";
    case Errc::MalformedHeader: return "malformed header";
    case Errc::ChecksumMismatch: return "checksum mismatch";
    case Errc::DecompressionError: return "decompression error";
    case Errc::NoManifest: return "no manifest";
    case Errc::MissingChunk: return "missing chunk";
    case Errc::CrcMismatch: return "crc mismatch";
    case Errc::KeyCollision: return "key collision";
    case Errc::EmptyPayload: return "empty payload";
    case Errc::CorruptManifest: return "corrupt manifest";
    case Errc::CoefficientCountMismatch: return "coefficient count mismatch";
    case Errc::DimensionMismatch: return "dimension mismatch";
    case Errc::UnsupportedSize: return "unsupported size";
    case Errc::MissingRange: return "missing range";
    case Errc::MissingPatch: return "missing patch";
    case Errc::InconsistentPlan: return "inconsistent plan";
    case Errc::NoSurface: return "no surface";
    case Errc::Overflow: return "overflow";
    case Errc::InvalidArgument: return "invalid argument";
  }
  return "unknown";
}

}  // namespace ckptleak
