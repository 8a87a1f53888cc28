#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/addr.hpp"

namespace edgesim {

enum class EtherType : uint16_t { Arp = 0x0806, Ipv4 = 0x0800 };
enum class ArpOp : uint8_t { Request = 1, Reply = 2 };
enum class IpProto : uint8_t { Icmp = 1, Tcp = 6, Udp = 17 };
enum class IcmpKind : uint8_t { EchoReply = 0, EchoRequest = 8 };

struct EthHeader {
  MacAddress src;
  MacAddress dst;
  EtherType type{EtherType::Ipv4};
};

struct ArpHeader {
  ArpOp opcode{ArpOp::Request};
  MacAddress src_mac;
  Ipv4Address src_ip;
  MacAddress dst_mac;
  Ipv4Address dst_ip;
};

struct Ipv4Header {
  Ipv4Address src;
  Ipv4Address dst;
  IpProto proto{IpProto::Icmp};
};

struct L4Header {
  uint16_t src_port{0};
  uint16_t dst_port{0};
};

struct IcmpHeader {
  IcmpKind kind{IcmpKind::EchoRequest};
  uint32_t seq{0};
};

/// One simulated frame as a stack of parsed headers. Exactly one of
/// {arp, ipv4} is present; l4 is present iff proto is TCP/UDP, icmp iff
/// proto is ICMP.
struct Frame {
  EthHeader eth;
  std::optional<ArpHeader> arp;
  std::optional<Ipv4Header> ipv4;
  std::optional<L4Header> l4;
  std::optional<IcmpHeader> icmp;
  uint32_t payload_bytes{0};

  uint32_t wire_size() const;

  /// Canonical bytes of the fields that identify a flow: eth addresses and
  /// type, IP addresses and protocol, and L4 ports when present.
  std::vector<uint8_t> flow_key_bytes() const;

  std::string describe() const;

  static Frame make_arp_request(MacAddress src_mac, Ipv4Address src_ip,
                                Ipv4Address target_ip);
  static Frame make_arp_reply(MacAddress answer_mac, Ipv4Address answer_ip,
                              MacAddress requester_mac,
                              Ipv4Address requester_ip);
  static Frame make_icmp_echo(IcmpKind kind, MacAddress src_mac,
                              Ipv4Address src_ip, Ipv4Address dst_ip,
                              uint32_t seq, uint32_t payload = 56);
  static Frame make_l4(IpProto proto, MacAddress src_mac, Ipv4Address src_ip,
                       Ipv4Address dst_ip, uint16_t src_port,
                       uint16_t dst_port, uint32_t payload = 64);
};

/// 64-bit FNV-1a over an arbitrary byte string.
uint64_t fnv1a64(const std::vector<uint8_t>& bytes);

}  // namespace edgesim
