#include "edgesim/addr.hpp"

#include <cstdio>

namespace edgesim {

uint64_t MacAddress::as_integer() const {
  uint64_t v = 0;
  for (uint8_t o : octets) v = (v << 8) | o;
  return v;
}

MacAddress MacAddress::from_integer(uint64_t value) {
  MacAddress m;
  for (int i = 5; i >= 0; --i) {
    m.octets[static_cast<size_t>(i)] = static_cast<uint8_t>(value & 0xff);
    value >>= 8;
  }
  return m;
}

MacAddress MacAddress::broadcast() {
  return MacAddress{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}};
}

bool MacAddress::is_broadcast() const { return *this == broadcast(); }

std::string MacAddress::to_string() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0],
                octets[1], octets[2], octets[3], octets[4], octets[5]);
  return buf;
}

std::optional<MacAddress> MacAddress::parse(const std::string& text) {
  MacAddress m;
  unsigned v[6];
  char tail;
  if (std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x%c", &v[0], &v[1], &v[2],
                  &v[3], &v[4], &v[5], &tail) != 6) {
    return std::nullopt;
  }
  for (size_t i = 0; i < 6; ++i) {
    if (v[i] > 0xff) return std::nullopt;
    m.octets[i] = static_cast<uint8_t>(v[i]);
  }
  return m;
}

uint32_t Ipv4Address::as_integer() const {
  uint32_t v = 0;
  for (uint8_t o : octets) v = (v << 8) | o;
  return v;
}

Ipv4Address Ipv4Address::from_integer(uint32_t value) {
  Ipv4Address a;
  for (int i = 3; i >= 0; --i) {
    a.octets[static_cast<size_t>(i)] = static_cast<uint8_t>(value & 0xff);
    value >>= 8;
  }
  return a;
}

std::string Ipv4Address::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%u.%u.%u.%u", octets[0], octets[1],
                octets[2], octets[3]);
  return buf;
}

std::optional<Ipv4Address> Ipv4Address::parse(const std::string& text) {
  Ipv4Address a;
  unsigned v[4];
  char tail;
  if (std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &v[0], &v[1], &v[2], &v[3],
                  &tail) != 4) {
    return std::nullopt;
  }
  for (size_t i = 0; i < 4; ++i) {
    if (v[i] > 255) return std::nullopt;
    a.octets[i] = static_cast<uint8_t>(v[i]);
  }
  return a;
}

}  // namespace edgesim
