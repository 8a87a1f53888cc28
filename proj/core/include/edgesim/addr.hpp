#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace edgesim {

/// 48-bit hardware address, comparable so it can key ordered maps.
struct MacAddress {
  std::array<uint8_t, 6> octets{};

  auto operator<=>(const MacAddress&) const = default;

  /// Big-endian interpretation of the six octets as an unsigned 48-bit value.
  uint64_t as_integer() const;
  static MacAddress from_integer(uint64_t value);

  static MacAddress broadcast();
  bool is_broadcast() const;

  std::string to_string() const;
  static std::optional<MacAddress> parse(const std::string& text);
};

struct Ipv4Address {
  std::array<uint8_t, 4> octets{};

  auto operator<=>(const Ipv4Address&) const = default;

  uint32_t as_integer() const;
  static Ipv4Address from_integer(uint32_t value);

  std::string to_string() const;
  static std::optional<Ipv4Address> parse(const std::string& text);
};

}  // namespace edgesim
