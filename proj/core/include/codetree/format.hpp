#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace codetree {

// 9 significant digits, correctly rounded (half-even), locale and
// endianness independent. Non-finite values
// print as "nan", "inf", "-inf"; empty optionals as "".
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

// 64-bit FNV-1a of raw bytes.
std::uint64_t content_hash(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace codetree
