#include "fogline/net.hpp"

#include <cstdio>

#include "fogline/error.hpp"

namespace fogline {

std::optional<Ipv4> Ipv4::try_parse(const std::string& text) {
  uint32_t bits = 0;
  int octet = 0;
  int digits = 0;
  int parts = 0;
  for (char c : text) {
    if (c >= '0' && c <= '9') {
      octet = octet * 10 + (c - '0');
      if (++digits > 3 || octet > 255) return std::nullopt;
    } else if (c == '.') {
      if (digits == 0 || ++parts > 3) return std::nullopt;
      bits = (bits << 8) | static_cast<uint32_t>(octet);
      octet = 0;
      digits = 0;
    } else {
      return std::nullopt;
    }
  }
  if (parts != 3 || digits == 0) return std::nullopt;
  bits = (bits << 8) | static_cast<uint32_t>(octet);
  return Ipv4(bits);
}

Ipv4 Ipv4::parse(const std::string& text) {
  auto ip = try_parse(text);
  if (!ip) raise(Errc::InvalidArgument, "not an IPv4 address: '" + text + "'");
  return *ip;
}

std::string Ipv4::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (bits_ >> 24) & 0xff, (bits_ >> 16) & 0xff,
                (bits_ >> 8) & 0xff, bits_ & 0xff);
  return buf;
}

Cidr::Cidr(Ipv4 base, int prefix_len) : prefix_len_(prefix_len) {
  if (prefix_len < 0 || prefix_len > 32)
    raise(Errc::InvalidArgument, "CIDR prefix length out of range");
  network_ = Ipv4(base.bits() & mask());
}

Cidr Cidr::parse(const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos) raise(Errc::InvalidArgument, "CIDR missing '/': '" + text + "'");
  Ipv4 base = Ipv4::parse(text.substr(0, slash));
  const std::string len_str = text.substr(slash + 1);
  if (len_str.empty() || len_str.size() > 2) raise(Errc::InvalidArgument, "bad CIDR prefix: '" + text + "'");
  int len = 0;
  for (char c : len_str) {
    if (c < '0' || c > '9') raise(Errc::InvalidArgument, "bad CIDR prefix: '" + text + "'");
    len = len * 10 + (c - '0');
  }
  return Cidr(base, len);
}

uint32_t Cidr::mask() const {
  return prefix_len_ == 0 ? 0u : ~uint32_t{0} << (32 - prefix_len_);
}

bool Cidr::contains(Ipv4 ip) const {
  return (ip.bits() & mask()) == network_.bits();
}

bool Cidr::contains(const Cidr& other) const {
  return other.prefix_len_ >= prefix_len_ && contains(other.network_);
}

bool Cidr::overlaps(const Cidr& other) const {
  return contains(other.network_) || other.contains(network_);
}

uint64_t Cidr::usable_hosts() const {
  if (prefix_len_ > 30) return 0;
  return num_addresses() - 2;
}

Ipv4 Cidr::first_host() const {
  return Ipv4(network_.bits() + 1);
}

Ipv4 Cidr::broadcast() const {
  return Ipv4(network_.bits() + static_cast<uint32_t>(num_addresses() - 1));
}

Cidr Cidr::upper_half() const {
  if (prefix_len_ >= 32) raise(Errc::InvalidArgument, "cannot split a /32");
  Cidr half(Ipv4(network_.bits() + static_cast<uint32_t>(num_addresses() / 2)), prefix_len_ + 1);
  return half;
}

std::string Cidr::str() const {
  return network_.str() + "/" + std::to_string(prefix_len_);
}

Address Address::parse(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos)
    raise(Errc::InvalidArgument, "address missing ':port': '" + text + "'");
  Ipv4 ip = Ipv4::parse(text.substr(0, colon));
  int port = 0;
  const std::string port_str = text.substr(colon + 1);
  if (port_str.empty()) raise(Errc::InvalidArgument, "empty port: '" + text + "'");
  for (char c : port_str) {
    if (c < '0' || c > '9') raise(Errc::InvalidArgument, "bad port: '" + text + "'");
    port = port * 10 + (c - '0');
    if (port > 65535) raise(Errc::InvalidArgument, "port out of range: '" + text + "'");
  }
  return Address{ip, static_cast<uint16_t>(port)};
}

std::string Address::str() const {
  return ip.str() + ":" + std::to_string(port);
}

}  // namespace fogline
