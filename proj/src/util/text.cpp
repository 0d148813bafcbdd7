#include "damsa/util/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <stdexcept>

#include "damsa/util/utf8.hpp"

namespace damsa::util {

std::string nfc(std::string_view text) {
  UErrorCode ec = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(ec);
  if (U_FAILURE(ec)) throw std::runtime_error("ICU NFC instance unavailable");
  icu::UnicodeString in = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = norm->normalize(in, ec);
  if (U_FAILURE(ec)) throw std::runtime_error("ICU NFC normalization failed");
  std::string result;
  out.toUTF8String(result);
  return result;
}

std::string canonical_text(std::string_view text) {
  return trim(nfc(text));
}

}  // namespace damsa::util
