#pragma once

#include <string>
#include <string_view>

namespace damsa::util {

// Unicode NFC. Canonical composition only; compatibility forms (Arabic
// presentation forms, ligatures) are left as-is.
std::string nfc(std::string_view text);

// NFC followed by whitespace trimming: the canonical form used for
// segment text at ingestion and for cross-split overlap equality.
std::string canonical_text(std::string_view text);

}  // namespace damsa::util
