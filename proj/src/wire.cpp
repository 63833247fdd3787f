// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/wire.h"

#include <algorithm>
#include <map>

namespace islandbridge::wire
{
  namespace
  {
    char lower(char c)
    {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    }

    std::string lowercase(std::string_view s)
    {
      std::string out(s);
      for (auto& c : out)
        c = lower(c);
      return out;
    }

    bool iequal(std::string_view a, std::string_view b)
    {
      if (a.size() != b.size())
        return false;
      for (size_t i = 0; i < a.size(); ++i)
        if (lower(a[i]) != lower(b[i]))
          return false;
      return true;
    }

    void validate_labels(const std::vector<std::string>& labels)
    {
      size_t wire = 1;
      for (const auto& label : labels)
      {
        if (label.empty())
          throw WireError(WireErrc::MalformedLabel, "name", "empty label");
        if (label.size() > max_label_length)
          throw WireError(
            WireErrc::MalformedLabel, "name", "label longer than 63 bytes");
        wire += 1 + label.size();
      }
      if (wire > max_name_wire_length)
        throw WireError(
          WireErrc::NameTooLong,
          "name",
          std::to_string(wire) + " wire bytes");
    }

    void put_name(Bytes& out, const DomainName& name, bool canonical)
    {
      for (const auto& label : name.labels())
      {
        out.push_back(static_cast<uint8_t>(label.size()));
        if (canonical)
          for (char c : label)
            out.push_back(static_cast<uint8_t>(lower(c)));
        else
          out.insert(out.end(), label.begin(), label.end());
      }
      out.push_back(0);
    }

    DomainName read_name(ByteReader& r)
    {
      std::vector<std::string> labels;
      size_t wire = 1;
      size_t resume = 0;
      bool jumped = false;
      size_t lowest_target = r.pos();

      while (true)
      {
        size_t label_pos = r.pos();
        uint8_t len = r.u8();
        if (len == 0)
          break;

        uint8_t kind = len & 0xC0;
        if (kind == 0xC0)
        {
          size_t target = (size_t(len & 0x3F) << 8) | r.u8();
          // Pointers must go strictly backwards, which also rules out loops.
          if (target >= lowest_target || target >= label_pos)
            throw WireError(
              WireErrc::MalformedLabel, "name", "forward compression pointer");
          if (!jumped)
            resume = r.pos();
          jumped = true;
          lowest_target = target;
          r.seek(target);
          continue;
        }
        if (kind != 0)
          throw WireError(
            WireErrc::MalformedLabel, "name", "reserved label type");

        auto raw = r.bytes(len);
        wire += 1 + len;
        if (wire > max_name_wire_length)
          throw WireError(WireErrc::NameTooLong, "name");
        labels.emplace_back(raw.begin(), raw.end());
      }

      if (jumped)
        r.seek(resume);
      return DomainName(std::move(labels));
    }

    template <typename F>
    auto in_section(std::string_view section, F&& f)
    {
      try
      {
        return f();
      }
      catch (const ReadPastEnd&)
      {
        throw WireError(WireErrc::Truncated, std::string(section));
      }
      catch (const WireError& e)
      {
        if (e.section() == "name" || e.section() == "rdata")
          throw WireError(e.code(), std::string(section), e.what());
        throw;
      }
    }

    Rdata read_rdata(ByteReader& r, RType type, size_t rdlen)
    {
      const size_t end = r.pos() + rdlen;
      if (end > r.whole().size())
        throw ReadPastEnd();

      auto remaining_in_rdata = [&]() -> size_t {
        if (r.pos() > end)
          throw WireError(WireErrc::MalformedRdata, "rdata", "overrun");
        return end - r.pos();
      };

      Rdata out;
      switch (type)
      {
        case RType::A:
        {
          if (rdlen != 4)
            throw WireError(WireErrc::MalformedRdata, "rdata", "A length");
          ARdata a;
          for (auto& o : a.address.octets)
            o = r.u8();
          out = a;
          break;
        }
        case RType::NS:
          out = NsRdata{read_name(r)};
          break;
        case RType::DNSKEY:
        {
          DnskeyRdata k;
          k.flags = r.u16();
          k.protocol = r.u8();
          k.algorithm = r.u8();
          k.public_key = r.bytes(remaining_in_rdata());
          out = std::move(k);
          break;
        }
        case RType::DS:
        {
          DsRdata d;
          d.key_tag = r.u16();
          d.algorithm = r.u8();
          d.digest_type = r.u8();
          d.digest = r.bytes(remaining_in_rdata());
          out = std::move(d);
          break;
        }
        case RType::RRSIG:
        {
          RrsigRdata s;
          auto covered = rtype_from_code(r.u16());
          if (!covered || *covered == RType::OPT)
            throw WireError(
              WireErrc::UnsupportedType, "rdata", "RRSIG type covered");
          s.type_covered = *covered;
          s.algorithm = r.u8();
          s.labels = r.u8();
          s.original_ttl = r.u32();
          s.expiration = r.u32();
          s.inception = r.u32();
          s.key_tag = r.u16();
          s.signer = read_name(r);
          s.signature = r.bytes(remaining_in_rdata());
          out = std::move(s);
          break;
        }
        case RType::OPT:
          throw WireError(WireErrc::MisplacedOpt, "rdata");
      }
      if (r.pos() != end)
        throw WireError(WireErrc::MalformedRdata, "rdata", "length mismatch");
      return out;
    }

    std::vector<EdnsOption> read_options(ByteView rdata)
    {
      std::vector<EdnsOption> options;
      ByteReader r(rdata);
      try
      {
        while (!r.at_end())
        {
          EdnsOption opt;
          opt.code = r.u16();
          uint16_t len = r.u16();
          opt.payload = r.bytes(len);
          options.push_back(std::move(opt));
        }
      }
      catch (const ReadPastEnd&)
      {
        throw WireError(
          WireErrc::MalformedRdata, "additional", "OPT option overrun");
      }
      return options;
    }

    void put_record(Bytes& out, const ResourceRecord& rr)
    {
      put_name(out, rr.owner, false);
      put_u16(out, static_cast<uint16_t>(rr.type()));
      put_u16(out, class_in);
      put_u32(out, rr.ttl);
      auto rdata = encode_rdata(rr.rdata);
      if (rdata.size() > 0xFFFF)
        throw WireError(WireErrc::MalformedRdata, "rdata", "rdata too long");
      put_u16(out, static_cast<uint16_t>(rdata.size()));
      append(out, rdata);
    }

    uint16_t count16(size_t n, std::string_view section)
    {
      if (n > 0xFFFF)
        throw WireError(WireErrc::CountMismatch, std::string(section));
      return static_cast<uint16_t>(n);
    }

    DnsMessage decode_impl(ByteView bytes, std::vector<RecordSpan>* layout)
    {
      if (bytes.size() < header_size)
        throw WireError(WireErrc::Truncated, "header");

      ByteReader r(bytes);
      DnsMessage msg;
      auto& h = msg.header;
      h.txid = r.u16();
      uint16_t flags = r.u16();
      h.qr = flags & 0x8000;
      h.opcode = static_cast<uint8_t>((flags >> 11) & 0xF);
      h.aa = flags & 0x0400;
      h.tc = flags & 0x0200;
      h.rd = flags & 0x0100;
      h.ra = flags & 0x0080;
      h.ad = flags & 0x0020;
      h.cd = flags & 0x0010;
      h.rcode = static_cast<Rcode>(flags & 0xF);
      const uint16_t counts[4] = {r.u16(), r.u16(), r.u16(), r.u16()};

      if (counts[0] > 1)
        throw WireError(
          WireErrc::CountMismatch, "question", "more than one question");
      if (counts[0] == 1)
      {
        msg.question = in_section("question", [&] {
          if (r.at_end())
            throw WireError(WireErrc::CountMismatch, "question");
          Question q;
          q.name = read_name(r);
          auto type = rtype_from_code(r.u16());
          if (!type || *type == RType::OPT)
            throw WireError(WireErrc::UnsupportedType, "question");
          q.type = *type;
          if (r.u16() != class_in)
            throw WireError(WireErrc::UnsupportedClass, "question");
          return q;
        });
      }

      const Section sections[3] = {
        Section::Answer, Section::Authority, Section::Additional};
      std::vector<ResourceRecord>* targets[3] = {
        &msg.answers, &msg.authority, &msg.additional};

      for (int s = 0; s < 3; ++s)
      {
        const auto section_name = to_string(sections[s]);
        size_t next_index = 0;
        for (uint16_t i = 0; i < counts[s + 1]; ++i)
        {
          if (r.at_end())
            throw WireError(
              WireErrc::CountMismatch,
              std::string(section_name),
              "count says " + std::to_string(counts[s + 1]) + ", found " +
                std::to_string(i));

          in_section(section_name, [&] {
            const size_t start = r.pos();
            auto owner = read_name(r);
            const uint16_t type_code = r.u16();
            const uint16_t klass = r.u16();
            const size_t ttl_offset = r.pos();
            const uint32_t ttl = r.u32();
            const uint16_t rdlen = r.u16();

            auto type = rtype_from_code(type_code);
            if (!type)
              throw WireError(
                WireErrc::UnsupportedType,
                std::string(section_name),
                "type " + std::to_string(type_code));

            if (*type == RType::OPT)
            {
              if (sections[s] != Section::Additional)
                throw WireError(
                  WireErrc::MisplacedOpt, std::string(section_name));
              if (msg.edns)
                throw WireError(WireErrc::DuplicateOpt, "additional");
              if (!owner.is_root())
                throw WireError(
                  WireErrc::MalformedRdata, "additional", "OPT owner not root");
              msg.edns = read_options(r.bytes(rdlen));
              if (layout)
                layout->push_back(
                  {sections[s], 0, RType::OPT, start, r.pos() - start, ttl_offset});
              return 0;
            }

            if (klass != class_in)
              throw WireError(
                WireErrc::UnsupportedClass, std::string(section_name));

            ResourceRecord rr;
            rr.owner = std::move(owner);
            rr.ttl = ttl;
            rr.rdata = read_rdata(r, *type, rdlen);
            if (layout)
              layout->push_back(
                {sections[s], next_index, *type, start, r.pos() - start, ttl_offset});
            ++next_index;
            targets[s]->push_back(std::move(rr));
            return 0;
          });
        }
      }

      if (!r.at_end())
        throw WireError(
          WireErrc::CountMismatch, "additional", "trailing bytes after last record");
      return msg;
    }
  }

  std::string_view to_string(WireErrc code)
  {
    switch (code)
    {
      case WireErrc::Truncated:
        return "Truncated";
      case WireErrc::MalformedLabel:
        return "MalformedLabel";
      case WireErrc::NameTooLong:
        return "NameTooLong";
      case WireErrc::CountMismatch:
        return "CountMismatch";
      case WireErrc::UnsupportedType:
        return "UnsupportedType";
      case WireErrc::UnsupportedClass:
        return "UnsupportedClass";
      case WireErrc::MalformedRdata:
        return "MalformedRdata";
      case WireErrc::MisplacedOpt:
        return "MisplacedOpt";
      case WireErrc::DuplicateOpt:
        return "DuplicateOpt";
      case WireErrc::MixedRrset:
        return "MixedRrset";
    }
    return "?";
  }

  WireError::WireError(
    WireErrc code, std::string section, const std::string& detail) :
    std::runtime_error(
      std::string(to_string(code)) + " in " + section +
      (detail.empty() ? "" : ": " + detail)),
    code_(code),
    section_(std::move(section))
  {}

  std::string_view to_string(RType type)
  {
    switch (type)
    {
      case RType::A:
        return "A";
      case RType::NS:
        return "NS";
      case RType::OPT:
        return "OPT";
      case RType::DS:
        return "DS";
      case RType::RRSIG:
        return "RRSIG";
      case RType::DNSKEY:
        return "DNSKEY";
    }
    return "?";
  }

  std::optional<RType> rtype_from_string(std::string_view text)
  {
    for (auto t :
         {RType::A, RType::NS, RType::OPT, RType::DS, RType::RRSIG, RType::DNSKEY})
      if (iequal(to_string(t), text))
        return t;
    return std::nullopt;
  }

  std::optional<RType> rtype_from_code(uint16_t code)
  {
    switch (code)
    {
      case 1:
      case 2:
      case 41:
      case 43:
      case 46:
      case 48:
        return static_cast<RType>(code);
      default:
        return std::nullopt;
    }
  }

  std::string_view to_string(Section s)
  {
    switch (s)
    {
      case Section::Header:
        return "header";
      case Section::Question:
        return "question";
      case Section::Answer:
        return "answer";
      case Section::Authority:
        return "authority";
      case Section::Additional:
        return "additional";
    }
    return "?";
  }

  DomainName::DomainName(std::vector<std::string> labels) :
    labels_(std::move(labels))
  {
    validate_labels(labels_);
  }

  DomainName DomainName::parse(std::string_view text)
  {
    if (text.empty() || text == ".")
      return {};
    if (text.back() == '.')
      text.remove_suffix(1);
    std::vector<std::string> labels;
    size_t start = 0;
    while (true)
    {
      size_t dot = text.find('.', start);
      labels.emplace_back(text.substr(start, dot - start));
      if (dot == std::string_view::npos)
        break;
      start = dot + 1;
    }
    return DomainName(std::move(labels));
  }

  size_t DomainName::wire_length() const
  {
    size_t n = 1;
    for (const auto& l : labels_)
      n += 1 + l.size();
    return n;
  }

  std::string DomainName::to_string() const
  {
    if (labels_.empty())
      return ".";
    std::string out;
    for (const auto& l : labels_)
    {
      if (!out.empty())
        out += '.';
      out += l;
    }
    return out;
  }

  DomainName DomainName::canonical() const
  {
    DomainName out;
    out.labels_.reserve(labels_.size());
    for (const auto& l : labels_)
      out.labels_.push_back(lowercase(l));
    return out;
  }

  DomainName DomainName::parent() const
  {
    DomainName out;
    if (!labels_.empty())
      out.labels_.assign(labels_.begin() + 1, labels_.end());
    return out;
  }

  DomainName DomainName::child(std::string_view label) const
  {
    std::vector<std::string> labels;
    labels.reserve(labels_.size() + 1);
    labels.emplace_back(label);
    labels.insert(labels.end(), labels_.begin(), labels_.end());
    return DomainName(std::move(labels));
  }

  bool DomainName::is_subdomain_of(const DomainName& ancestor) const
  {
    if (ancestor.labels_.size() > labels_.size())
      return false;
    size_t offset = labels_.size() - ancestor.labels_.size();
    for (size_t i = 0; i < ancestor.labels_.size(); ++i)
      if (!iequal(labels_[offset + i], ancestor.labels_[i]))
        return false;
    return true;
  }

  bool operator==(const DomainName& a, const DomainName& b)
  {
    if (a.labels_.size() != b.labels_.size())
      return false;
    for (size_t i = 0; i < a.labels_.size(); ++i)
      if (!iequal(a.labels_[i], b.labels_[i]))
        return false;
    return true;
  }

  bool operator<(const DomainName& a, const DomainName& b)
  {
    // Canonical DNS order: compare lowercased labels from the root down.
    auto ia = a.labels_.rbegin();
    auto ib = b.labels_.rbegin();
    for (; ia != a.labels_.rend() && ib != b.labels_.rend(); ++ia, ++ib)
    {
      auto la = lowercase(*ia);
      auto lb = lowercase(*ib);
      if (la != lb)
        return la < lb;
    }
    return a.labels_.size() < b.labels_.size();
  }

  RType rdata_type(const Rdata& rdata)
  {
    struct
    {
      RType operator()(const ARdata&) const
      {
        return RType::A;
      }
      RType operator()(const NsRdata&) const
      {
        return RType::NS;
      }
      RType operator()(const DnskeyRdata&) const
      {
        return RType::DNSKEY;
      }
      RType operator()(const DsRdata&) const
      {
        return RType::DS;
      }
      RType operator()(const RrsigRdata&) const
      {
        return RType::RRSIG;
      }
    } visitor;
    return std::visit(visitor, rdata);
  }

  Bytes encode_rdata(const Rdata& rdata, bool canonical)
  {
    Bytes out;
    if (auto a = std::get_if<ARdata>(&rdata))
    {
      out.assign(a->address.octets.begin(), a->address.octets.end());
    }
    else if (auto ns = std::get_if<NsRdata>(&rdata))
    {
      put_name(out, ns->host, canonical);
    }
    else if (auto k = std::get_if<DnskeyRdata>(&rdata))
    {
      put_u16(out, k->flags);
      put_u8(out, k->protocol);
      put_u8(out, k->algorithm);
      append(out, k->public_key);
    }
    else if (auto d = std::get_if<DsRdata>(&rdata))
    {
      put_u16(out, d->key_tag);
      put_u8(out, d->algorithm);
      put_u8(out, d->digest_type);
      append(out, d->digest);
    }
    else if (auto s = std::get_if<RrsigRdata>(&rdata))
    {
      put_u16(out, static_cast<uint16_t>(s->type_covered));
      put_u8(out, s->algorithm);
      put_u8(out, s->labels);
      put_u32(out, s->original_ttl);
      put_u32(out, s->expiration);
      put_u32(out, s->inception);
      put_u16(out, s->key_tag);
      put_name(out, s->signer, canonical);
      append(out, s->signature);
    }
    return out;
  }

  EdnsOption ds_absent_option()
  {
    return {opt_ds_absent, {}};
  }

  EdnsOption bridge_available_option(uint16_t port)
  {
    Bytes payload;
    put_u16(payload, port);
    return {opt_bridge_available, payload};
  }

  bool DnsMessage::has_option(uint16_t code) const
  {
    return find_option(code) != nullptr;
  }

  const EdnsOption* DnsMessage::find_option(uint16_t code) const
  {
    if (!edns)
      return nullptr;
    for (const auto& o : *edns)
      if (o.code == code)
        return &o;
    return nullptr;
  }

  void DnsMessage::add_option(EdnsOption option)
  {
    if (!edns)
      edns.emplace();
    edns->push_back(std::move(option));
  }

  size_t DnsMessage::remove_option(uint16_t code)
  {
    if (!edns)
      return 0;
    return std::erase_if(*edns, [code](const auto& o) { return o.code == code; });
  }

  std::optional<uint16_t> bridge_port(const DnsMessage& msg)
  {
    auto opt = msg.find_option(opt_bridge_available);
    if (!opt || opt->payload.size() != 2)
      return std::nullopt;
    return static_cast<uint16_t>((opt->payload[0] << 8) | opt->payload[1]);
  }

  Bytes encode(const DnsMessage& msg)
  {
    Bytes out;
    out.reserve(512);
    const auto& h = msg.header;
    put_u16(out, h.txid);
    uint16_t flags = 0;
    flags |= h.qr ? 0x8000 : 0;
    flags |= static_cast<uint16_t>((h.opcode & 0xF) << 11);
    flags |= h.aa ? 0x0400 : 0;
    flags |= h.tc ? 0x0200 : 0;
    flags |= h.rd ? 0x0100 : 0;
    flags |= h.ra ? 0x0080 : 0;
    flags |= h.ad ? 0x0020 : 0;
    flags |= h.cd ? 0x0010 : 0;
    flags |= static_cast<uint16_t>(h.rcode) & 0xF;
    put_u16(out, flags);
    put_u16(out, msg.question ? 1 : 0);
    put_u16(out, count16(msg.answers.size(), "answer"));
    put_u16(out, count16(msg.authority.size(), "authority"));
    put_u16(
      out, count16(msg.additional.size() + (msg.edns ? 1 : 0), "additional"));

    if (msg.question)
    {
      if (msg.question->type == RType::OPT)
        throw WireError(WireErrc::UnsupportedType, "question");
      put_name(out, msg.question->name, false);
      put_u16(out, static_cast<uint16_t>(msg.question->type));
      put_u16(out, class_in);
    }
    for (const auto& rr : msg.answers)
      put_record(out, rr);
    for (const auto& rr : msg.authority)
      put_record(out, rr);
    for (const auto& rr : msg.additional)
      put_record(out, rr);

    if (msg.edns)
    {
      Bytes options;
      for (const auto& o : *msg.edns)
      {
        put_u16(options, o.code);
        put_u16(options, count16(o.payload.size(), "additional"));
        append(options, o.payload);
      }
      put_u8(out, 0);
      put_u16(out, static_cast<uint16_t>(RType::OPT));
      put_u16(out, edns_udp_payload);
      put_u32(out, 0);
      put_u16(out, count16(options.size(), "additional"));
      append(out, options);
    }
    return out;
  }

  DnsMessage decode(ByteView bytes)
  {
    return decode_impl(bytes, nullptr);
  }

  std::vector<RecordSpan> record_layout(ByteView bytes)
  {
    std::vector<RecordSpan> layout;
    decode_impl(bytes, &layout);
    return layout;
  }

  Bytes canonical_rrset_bytes(std::span<const ResourceRecord> rrset)
  {
    if (rrset.empty())
      throw WireError(WireErrc::MixedRrset, "rrset", "empty");

    const auto& first = rrset.front();
    for (const auto& rr : rrset)
      if (!(rr.owner == first.owner) || rr.type() != first.type())
        throw WireError(WireErrc::MixedRrset, "rrset");

    std::vector<Bytes> rdatas;
    rdatas.reserve(rrset.size());
    for (const auto& rr : rrset)
      rdatas.push_back(encode_rdata(rr.rdata, true));
    std::sort(rdatas.begin(), rdatas.end());
    rdatas.erase(std::unique(rdatas.begin(), rdatas.end()), rdatas.end());

    Bytes owner;
    put_name(owner, first.owner, true);

    Bytes out;
    for (const auto& rd : rdatas)
    {
      append(out, owner);
      put_u16(out, static_cast<uint16_t>(first.type()));
      put_u16(out, class_in);
      put_u32(out, 0);
      put_u16(out, static_cast<uint16_t>(rd.size()));
      append(out, rd);
    }
    return out;
  }

  RRset select(
    std::span<const ResourceRecord> section, const DomainName& owner, RType type)
  {
    RRset out;
    for (const auto& rr : section)
      if (rr.type() == type && rr.owner == owner)
        out.push_back(rr);
    return out;
  }

  std::vector<RRset> group_rrsets(std::span<const ResourceRecord> records)
  {
    std::vector<RRset> out;
    for (const auto& rr : records)
    {
      auto it = std::find_if(out.begin(), out.end(), [&](const RRset& set) {
        return set.front().type() == rr.type() && set.front().owner == rr.owner;
      });
      if (it == out.end())
        out.push_back({rr});
      else
        it->push_back(rr);
    }
    return out;
  }
}
