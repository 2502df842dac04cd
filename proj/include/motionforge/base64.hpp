#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace motionforge::base64 {

std::string encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> decode(std::string_view text);

}  // namespace motionforge::base64
