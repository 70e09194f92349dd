#pragma once

#include <string>
#include <string_view>

namespace pte::detail {

std::string base64_encode(std::string_view bytes);
/// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace pte::detail
