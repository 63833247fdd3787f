// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/bytes.h"
#include "islandbridge/ipv4.h"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// DNS wire format (RFC 1035 layout) restricted to the record types the
// resolver and nameservers exchange: A, NS, DS, RRSIG, DNSKEY and OPT.
// Names are never compressed on output. Compression pointers are accepted
// on input.

namespace islandbridge::wire
{
  enum class WireErrc
  {
    Truncated,
    MalformedLabel,
    NameTooLong,
    CountMismatch,
    UnsupportedType,
    UnsupportedClass,
    MalformedRdata,
    MisplacedOpt,
    DuplicateOpt,
    MixedRrset,
  };

  std::string_view to_string(WireErrc code);

  class WireError : public std::runtime_error
  {
  public:
    WireError(WireErrc code, std::string section, const std::string& detail = {});

    WireErrc code() const
    {
      return code_;
    }

    const std::string& section() const
    {
      return section_;
    }

  private:
    WireErrc code_;
    std::string section_;
  };

  enum class RType : uint16_t
  {
    A = 1,
    NS = 2,
    OPT = 41,
    DS = 43,
    RRSIG = 46,
    DNSKEY = 48,
  };

  constexpr uint16_t class_in = 1;
  constexpr uint16_t edns_udp_payload = 1232;
  constexpr size_t header_size = 12;
  constexpr size_t max_name_wire_length = 255;
  constexpr size_t max_label_length = 63;

  std::string_view to_string(RType type);
  std::optional<RType> rtype_from_string(std::string_view text);
  std::optional<RType> rtype_from_code(uint16_t code);

  /// A domain name as a list of labels. Case is preserved; comparison is
  /// case-insensitive (ASCII).
  class DomainName
  {
  public:
    DomainName() = default;
    explicit DomainName(std::vector<std::string> labels);

    /// Accepts "www.example.com", "www.example.com." and "." for the root.
    static DomainName parse(std::string_view text);

    static DomainName root()
    {
      return {};
    }

    const std::vector<std::string>& labels() const
    {
      return labels_;
    }

    bool is_root() const
    {
      return labels_.empty();
    }

    size_t label_count() const
    {
      return labels_.size();
    }

    size_t wire_length() const;
    std::string to_string() const;
    DomainName canonical() const;
    DomainName parent() const;
    DomainName child(std::string_view label) const;

    /// True when this name equals `ancestor` or lies below it.
    bool is_subdomain_of(const DomainName& ancestor) const;

    /// Exact, case-sensitive label comparison.
    bool identical(const DomainName& other) const
    {
      return labels_ == other.labels_;
    }

    friend bool operator==(const DomainName& a, const DomainName& b);
    friend bool operator<(const DomainName& a, const DomainName& b);

  private:
    std::vector<std::string> labels_;
  };

  struct ARdata
  {
    Ipv4Address address;
    friend bool operator==(const ARdata&, const ARdata&) = default;
  };

  struct NsRdata
  {
    DomainName host;
    friend bool operator==(const NsRdata&, const NsRdata&) = default;
  };

  struct DnskeyRdata
  {
    uint16_t flags = 0;
    uint8_t protocol = 3;
    uint8_t algorithm = 0;
    Bytes public_key;
    friend bool operator==(const DnskeyRdata&, const DnskeyRdata&) = default;
  };

  struct DsRdata
  {
    uint16_t key_tag = 0;
    uint8_t algorithm = 0;
    uint8_t digest_type = 0;
    Bytes digest;
    friend bool operator==(const DsRdata&, const DsRdata&) = default;
  };

  struct RrsigRdata
  {
    RType type_covered = RType::A;
    uint8_t algorithm = 0;
    uint8_t labels = 0;
    uint32_t original_ttl = 0;
    uint32_t expiration = 0;
    uint32_t inception = 0;
    uint16_t key_tag = 0;
    DomainName signer;
    Bytes signature;
    friend bool operator==(const RrsigRdata&, const RrsigRdata&) = default;
  };

  using Rdata = std::variant<ARdata, NsRdata, DnskeyRdata, DsRdata, RrsigRdata>;

  RType rdata_type(const Rdata& rdata);

  /// Rdata bytes. With `canonical` set, embedded names are lowercased.
  Bytes encode_rdata(const Rdata& rdata, bool canonical = false);

  struct ResourceRecord
  {
    DomainName owner;
    uint32_t ttl = 0;
    Rdata rdata;

    RType type() const
    {
      return rdata_type(rdata);
    }

    friend bool operator==(const ResourceRecord&, const ResourceRecord&) =
      default;
  };

  using RRset = std::vector<ResourceRecord>;

  struct EdnsOption
  {
    uint16_t code = 0;
    Bytes payload;
    friend bool operator==(const EdnsOption&, const EdnsOption&) = default;
  };

  /// Query-side: the resolver holds no DS for the zone being asked.
  constexpr uint16_t opt_ds_absent = 65001;
  /// Response-side: payload is the 16-bit bridge port.
  constexpr uint16_t opt_bridge_available = 65002;

  EdnsOption ds_absent_option();
  EdnsOption bridge_available_option(uint16_t port);

  enum class Rcode : uint8_t
  {
    NoError = 0,
    FormErr = 1,
    ServFail = 2,
    NxDomain = 3,
    Refused = 5,
  };

  struct DnsHeader
  {
    uint16_t txid = 0;
    bool qr = false;
    uint8_t opcode = 0;
    bool aa = false;
    bool tc = false;
    bool rd = false;
    bool ra = false;
    bool ad = false;
    bool cd = false;
    Rcode rcode = Rcode::NoError;
    friend bool operator==(const DnsHeader&, const DnsHeader&) = default;
  };

  struct Question
  {
    DomainName name;
    RType type = RType::A;
    friend bool operator==(const Question&, const Question&) = default;
  };

  enum class Section
  {
    Header,
    Question,
    Answer,
    Authority,
    Additional,
  };

  std::string_view to_string(Section s);

  struct DnsMessage
  {
    DnsHeader header;
    std::optional<Question> question;
    std::vector<ResourceRecord> answers;
    std::vector<ResourceRecord> authority;
    std::vector<ResourceRecord> additional;
    /// Present iff the message carries an OPT record.
    std::optional<std::vector<EdnsOption>> edns;

    bool has_option(uint16_t code) const;
    const EdnsOption* find_option(uint16_t code) const;
    /// Adds the option, creating the OPT record if needed.
    void add_option(EdnsOption option);
    /// Removes every option with `code`; returns how many were removed.
    size_t remove_option(uint16_t code);

    friend bool operator==(const DnsMessage&, const DnsMessage&) = default;
  };

  std::optional<uint16_t> bridge_port(const DnsMessage& msg);

  Bytes encode(const DnsMessage& msg);
  DnsMessage decode(ByteView bytes);

  /// Byte extent of one resource record inside an encoded message.
  struct RecordSpan
  {
    Section section;
    size_t index;
    RType type;
    size_t offset;
    size_t length;
    size_t ttl_offset;
  };

  /// Decodes `bytes` and reports where every record (including OPT) sits.
  std::vector<RecordSpan> record_layout(ByteView bytes);

  /// Canonical byte form of an RRset: lowercased owner, TTL zeroed, records
  /// sorted by canonical rdata with duplicates removed. Independent of input
  /// order and owner case.
  Bytes canonical_rrset_bytes(std::span<const ResourceRecord> rrset);

  /// Records in `section` with the given owner and type, in order.
  RRset select(
    std::span<const ResourceRecord> section,
    const DomainName& owner,
    RType type);

  /// Groups records into RRsets by (owner, type), in first-seen order.
  std::vector<RRset> group_rrsets(std::span<const ResourceRecord> records);
}
