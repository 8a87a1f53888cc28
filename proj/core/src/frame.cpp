#include "edgesim/frame.hpp"

namespace edgesim {

uint32_t Frame::wire_size() const {
  uint32_t size = 14;  // ethernet header
  if (arp) size += 28;
  if (ipv4) {
    size += 20;
    if (l4) size += ipv4->proto == IpProto::Tcp ? 20 : 8;
    if (icmp) size += 8;
  }
  return size + payload_bytes;
}

std::vector<uint8_t> Frame::flow_key_bytes() const {
  std::vector<uint8_t> key;
  key.reserve(28);
  key.insert(key.end(), eth.src.octets.begin(), eth.src.octets.end());
  key.insert(key.end(), eth.dst.octets.begin(), eth.dst.octets.end());
  const auto type = static_cast<uint16_t>(eth.type);
  key.push_back(static_cast<uint8_t>(type >> 8));
  key.push_back(static_cast<uint8_t>(type & 0xff));
  if (ipv4) {
    key.insert(key.end(), ipv4->src.octets.begin(), ipv4->src.octets.end());
    key.insert(key.end(), ipv4->dst.octets.begin(), ipv4->dst.octets.end());
    key.push_back(static_cast<uint8_t>(ipv4->proto));
    if (l4) {
      key.push_back(static_cast<uint8_t>(l4->src_port >> 8));
      key.push_back(static_cast<uint8_t>(l4->src_port & 0xff));
      key.push_back(static_cast<uint8_t>(l4->dst_port >> 8));
      key.push_back(static_cast<uint8_t>(l4->dst_port & 0xff));
    }
  }
  return key;
}

std::string Frame::describe() const {
  std::string s = eth.src.to_string() + ">" + eth.dst.to_string();
  if (arp) {
    s += arp->opcode == ArpOp::Request ? " arp-req " : " arp-rep ";
    s += arp->dst_ip.to_string();
  } else if (ipv4) {
    s += " ip " + ipv4->src.to_string() + ">" + ipv4->dst.to_string();
    if (icmp) {
      s += icmp->kind == IcmpKind::EchoRequest ? " echo-req" : " echo-rep";
    }
  }
  return s;
}

Frame Frame::make_arp_request(MacAddress src_mac, Ipv4Address src_ip,
                              Ipv4Address target_ip) {
  Frame f;
  f.eth = {src_mac, MacAddress::broadcast(), EtherType::Arp};
  f.arp = ArpHeader{ArpOp::Request, src_mac, src_ip, MacAddress{}, target_ip};
  return f;
}

Frame Frame::make_arp_reply(MacAddress answer_mac, Ipv4Address answer_ip,
                            MacAddress requester_mac,
                            Ipv4Address requester_ip) {
  Frame f;
  f.eth = {answer_mac, requester_mac, EtherType::Arp};
  f.arp =
      ArpHeader{ArpOp::Reply, answer_mac, answer_ip, requester_mac,
                requester_ip};
  return f;
}

Frame Frame::make_icmp_echo(IcmpKind kind, MacAddress src_mac,
                            Ipv4Address src_ip, Ipv4Address dst_ip,
                            uint32_t seq, uint32_t payload) {
  Frame f;
  f.eth = {src_mac, MacAddress{}, EtherType::Ipv4};
  f.ipv4 = Ipv4Header{src_ip, dst_ip, IpProto::Icmp};
  f.icmp = IcmpHeader{kind, seq};
  f.payload_bytes = payload;
  return f;
}

Frame Frame::make_l4(IpProto proto, MacAddress src_mac, Ipv4Address src_ip,
                     Ipv4Address dst_ip, uint16_t src_port, uint16_t dst_port,
                     uint32_t payload) {
  Frame f;
  f.eth = {src_mac, MacAddress{}, EtherType::Ipv4};
  f.ipv4 = Ipv4Header{src_ip, dst_ip, proto};
  f.l4 = L4Header{src_port, dst_port};
  f.payload_bytes = payload;
  return f;
}

uint64_t fnv1a64(const std::vector<uint8_t>& bytes) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace edgesim
