#pragma once

#include <string>
#include <string_view>

namespace damsa::util {

std::string sha256_hex(std::string_view data);

}  // namespace damsa::util
