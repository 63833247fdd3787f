// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace islandbridge
{
  using Bytes = std::vector<uint8_t>;
  using ByteView = std::span<const uint8_t>;

  std::string to_hex(ByteView data);
  Bytes from_hex(std::string_view hex);

  inline Bytes to_bytes(std::string_view s)
  {
    return Bytes(s.begin(), s.end());
  }

  inline void append(Bytes& out, ByteView data)
  {
    out.insert(out.end(), data.begin(), data.end());
  }

  inline void put_u8(Bytes& out, uint8_t v)
  {
    out.push_back(v);
  }

  inline void put_u16(Bytes& out, uint16_t v)
  {
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
  }

  inline void put_u32(Bytes& out, uint32_t v)
  {
    put_u16(out, static_cast<uint16_t>(v >> 16));
    put_u16(out, static_cast<uint16_t>(v));
  }

  inline void put_u64(Bytes& out, uint64_t v)
  {
    put_u32(out, static_cast<uint32_t>(v >> 32));
    put_u32(out, static_cast<uint32_t>(v));
  }

  /// Thrown by ByteReader when a read runs past the end of its input.
  struct ReadPastEnd : std::runtime_error
  {
    ReadPastEnd() : std::runtime_error("read past end of input") {}
  };

  /// Big-endian cursor over an immutable byte range.
  class ByteReader
  {
  public:
    explicit ByteReader(ByteView data, size_t pos = 0) : data_(data), pos_(pos)
    {}

    size_t pos() const
    {
      return pos_;
    }

    size_t remaining() const
    {
      return pos_ <= data_.size() ? data_.size() - pos_ : 0;
    }

    bool at_end() const
    {
      return remaining() == 0;
    }

    ByteView whole() const
    {
      return data_;
    }

    void seek(size_t pos)
    {
      if (pos > data_.size())
        throw ReadPastEnd();
      pos_ = pos;
    }

    uint8_t u8()
    {
      need(1);
      return data_[pos_++];
    }

    uint16_t u16()
    {
      need(2);
      uint16_t v = static_cast<uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
      pos_ += 2;
      return v;
    }

    uint32_t u32()
    {
      uint32_t hi = u16();
      return (hi << 16) | u16();
    }

    uint64_t u64()
    {
      uint64_t hi = u32();
      return (hi << 32) | u32();
    }

    Bytes bytes(size_t n)
    {
      need(n);
      Bytes out(data_.begin() + pos_, data_.begin() + pos_ + n);
      pos_ += n;
      return out;
    }

    Bytes rest()
    {
      return bytes(remaining());
    }

  private:
    void need(size_t n) const
    {
      if (remaining() < n)
        throw ReadPastEnd();
    }

    ByteView data_;
    size_t pos_;
  };
}
