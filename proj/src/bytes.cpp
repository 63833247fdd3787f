// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/bytes.h"

#include "islandbridge/ipv4.h"

#include <charconv>

namespace islandbridge
{
  std::string to_hex(ByteView data)
  {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (uint8_t b : data)
    {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xf]);
    }
    return out;
  }

  Bytes from_hex(std::string_view hex)
  {
    auto nibble = [](char c) -> int {
      if (c >= '0' && c <= '9')
        return c - '0';
      if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
      if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
      return -1;
    };
    if (hex.size() % 2 != 0)
      throw std::invalid_argument("odd-length hex string");
    Bytes out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
    {
      int hi = nibble(hex[i]);
      int lo = nibble(hex[i + 1]);
      if (hi < 0 || lo < 0)
        throw std::invalid_argument("invalid hex digit");
      out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
  }

  std::optional<Ipv4Address> Ipv4Address::parse(std::string_view text)
  {
    Ipv4Address addr;
    size_t start = 0;
    for (int i = 0; i < 4; ++i)
    {
      size_t end = text.find('.', start);
      if (i == 3)
      {
        if (end != std::string_view::npos)
          return std::nullopt;
        end = text.size();
      }
      else if (end == std::string_view::npos)
        return std::nullopt;

      auto part = text.substr(start, end - start);
      if (part.empty() || part.size() > 3)
        return std::nullopt;
      unsigned value = 0;
      auto [ptr, ec] =
        std::from_chars(part.data(), part.data() + part.size(), value);
      if (ec != std::errc() || ptr != part.data() + part.size() || value > 255)
        return std::nullopt;
      addr.octets[i] = static_cast<uint8_t>(value);
      start = end + 1;
    }
    return addr;
  }

  Ipv4Address Ipv4Address::from_u32(uint32_t v)
  {
    return Ipv4Address{
      {static_cast<uint8_t>(v >> 24),
       static_cast<uint8_t>(v >> 16),
       static_cast<uint8_t>(v >> 8),
       static_cast<uint8_t>(v)}};
  }

  uint32_t Ipv4Address::to_u32() const
  {
    return (uint32_t(octets[0]) << 24) | (uint32_t(octets[1]) << 16) |
      (uint32_t(octets[2]) << 8) | uint32_t(octets[3]);
  }

  std::string Ipv4Address::to_string() const
  {
    return std::to_string(octets[0]) + "." + std::to_string(octets[1]) + "." +
      std::to_string(octets[2]) + "." + std::to_string(octets[3]);
  }
}
