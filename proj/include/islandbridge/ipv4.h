// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace islandbridge
{
  /// An IPv4 address held in network byte order.
  struct Ipv4Address
  {
    std::array<uint8_t, 4> octets{};

    static std::optional<Ipv4Address> parse(std::string_view text);
    static Ipv4Address from_u32(uint32_t v);

    uint32_t to_u32() const;
    std::string to_string() const;

    friend auto operator<=>(const Ipv4Address&, const Ipv4Address&) = default;
  };
}
