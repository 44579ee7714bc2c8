#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>

namespace fogline {

/// IPv4 address stored in host byte order.
class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(uint32_t bits) : bits_(bits) {}

  static Ipv4 parse(const std::string& text);
  static std::optional<Ipv4> try_parse(const std::string& text);

  uint32_t bits() const { return bits_; }
  std::string str() const;

  auto operator<=>(const Ipv4&) const = default;

 private:
  uint32_t bits_ = 0;
};

/// IPv4 range in CIDR notation. The base address is canonicalized
/// (host bits cleared) on construction.
class Cidr {
 public:
  Cidr() = default;
  Cidr(Ipv4 base, int prefix_len);

  static Cidr parse(const std::string& text);

  Ipv4 network() const { return network_; }
  int prefix_len() const { return prefix_len_; }
  uint32_t mask() const;

  bool contains(Ipv4 ip) const;
  bool contains(const Cidr& other) const;
  bool overlaps(const Cidr& other) const;

  /// Total addresses in the range, network and broadcast included.
  uint64_t num_addresses() const { return uint64_t{1} << (32 - prefix_len_); }
  /// Addresses assignable to hosts (excludes network and broadcast
  /// for prefixes up to /30; /31 and /32 have none here).
  uint64_t usable_hosts() const;

  Ipv4 first_host() const;
  Ipv4 broadcast() const;

  /// Upper half of the range as its own CIDR (prefix one bit longer).
  Cidr upper_half() const;

  std::string str() const;

  auto operator<=>(const Cidr&) const = default;

 private:
  Ipv4 network_;
  int prefix_len_ = 32;
};

/// IPv4 endpoint, rendered as "ip:port".
struct Address {
  Ipv4 ip;
  uint16_t port = 0;

  static Address parse(const std::string& text);
  std::string str() const;

  auto operator<=>(const Address&) const = default;
};

}  // namespace fogline
