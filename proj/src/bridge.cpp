// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#include "islandbridge/bridge.h"

#include <sodium.h>

namespace islandbridge::bridge
{
  namespace
  {
    struct TypeOf
    {
      MessageType operator()(const ClientHello&) const
      {
        return MessageType::ClientHello;
      }
      MessageType operator()(const ServerHello&) const
      {
        return MessageType::ServerHello;
      }
      MessageType operator()(const Certificate&) const
      {
        return MessageType::Certificate;
      }
      MessageType operator()(const ServerHelloDone&) const
      {
        return MessageType::ServerHelloDone;
      }
      MessageType operator()(const ClientKeyExchange&) const
      {
        return MessageType::ClientKeyExchange;
      }
      MessageType operator()(const ChangeCipherSpec&) const
      {
        return MessageType::ChangeCipherSpec;
      }
      MessageType operator()(const Finished&) const
      {
        return MessageType::Finished;
      }
    };

    Bytes body_of(const HandshakeMessage& msg)
    {
      Bytes body;
      if (auto ch = std::get_if<ClientHello>(&msg))
      {
        append(body, ch->client_random);
        if (ch->cipher_list.size() > 0xFF)
          throw BridgeError(BridgeErrc::Malformed, "cipher list too long");
        put_u8(body, static_cast<uint8_t>(ch->cipher_list.size()));
        for (auto suite : ch->cipher_list)
          put_u16(body, suite);
      }
      else if (auto sh = std::get_if<ServerHello>(&msg))
      {
        append(body, sh->server_random);
        put_u16(body, sh->cipher_choice);
      }
      else if (auto c = std::get_if<Certificate>(&msg))
        body = c->cert;
      else if (auto kex = std::get_if<ClientKeyExchange>(&msg))
        body = kex->client_ephemeral_public;
      else if (auto fin = std::get_if<Finished>(&msg))
        append(body, fin->transcript_mac);
      return body;
    }

    Bytes frame(MessageType type, ByteView body)
    {
      if (body.size() > 0xFFFF)
        throw BridgeError(BridgeErrc::Malformed, "frame body too long");
      Bytes out;
      put_u8(out, static_cast<uint8_t>(type));
      put_u16(out, static_cast<uint16_t>(body.size()));
      append(out, body);
      return out;
    }

    template <size_t N>
    std::array<uint8_t, N> take_array(ByteReader& r)
    {
      auto b = r.bytes(N);
      std::array<uint8_t, N> out;
      std::copy(b.begin(), b.end(), out.begin());
      return out;
    }

    crypto::Nonce12 nonce_for(uint64_t seq)
    {
      crypto::Nonce12 n{};
      for (int i = 0; i < 8; ++i)
        n[4 + i] = static_cast<uint8_t>(seq >> (56 - 8 * i));
      return n;
    }

    Bytes record_ad(const crypto::Digest& transcript, uint64_t seq)
    {
      Bytes ad(transcript.begin(), transcript.end());
      put_u64(ad, seq);
      return ad;
    }

    bool mac_equal(const crypto::Digest& a, const crypto::Digest& b)
    {
      return crypto_verify_32(a.data(), b.data()) == 0;
    }

    const std::vector<MessageType> server_flight_1 = {
      MessageType::ServerHello,
      MessageType::Certificate,
      MessageType::ServerHelloDone};
    const std::vector<MessageType> server_flight_2 = {
      MessageType::ChangeCipherSpec, MessageType::Finished};
    const std::vector<MessageType> client_flight_1 = {MessageType::ClientHello};
    const std::vector<MessageType> client_flight_2 = {
      MessageType::ClientKeyExchange,
      MessageType::ChangeCipherSpec,
      MessageType::Finished};
    const std::vector<MessageType> nothing = {};
  }

  MessageType message_type(const HandshakeMessage& msg)
  {
    return std::visit(TypeOf{}, msg);
  }

  std::string_view to_string(MessageType type)
  {
    switch (type)
    {
      case MessageType::ClientHello:
        return "ClientHello";
      case MessageType::ServerHello:
        return "ServerHello";
      case MessageType::Certificate:
        return "Certificate";
      case MessageType::ServerHelloDone:
        return "ServerHelloDone";
      case MessageType::ClientKeyExchange:
        return "ClientKeyExchange";
      case MessageType::Finished:
        return "Finished";
      case MessageType::EncryptedRecord:
        return "EncryptedRecord";
      case MessageType::ChangeCipherSpec:
        return "ChangeCipherSpec";
    }
    return "?";
  }

  std::string_view to_string(State s)
  {
    switch (s)
    {
      case State::Idle:
        return "Idle";
      case State::AwaitServerHello:
        return "AwaitServerHello";
      case State::AwaitClientKex:
        return "AwaitClientKex";
      case State::AwaitFinished:
        return "AwaitFinished";
      case State::Established:
        return "Established";
      case State::Aborted:
        return "Aborted";
    }
    return "?";
  }

  std::string Abort::to_string() const
  {
    switch (reason)
    {
      case AbortReason::NoCommonCipher:
        return "NoCommonCipher";
      case AbortReason::CertRejected:
        return "CertRejected(" +
          std::string(
                 cert_rejection ? ipcert::to_string(*cert_rejection) : "?") +
          ")";
      case AbortReason::TranscriptMismatch:
        return "TranscriptMismatch";
      case AbortReason::MalformedKex:
        return "MalformedKex";
      case AbortReason::MalformedMessage:
        return "MalformedMessage";
      case AbortReason::OutOfOrder:
        return "OutOfOrder";
      case AbortReason::RecordTamper:
        return "RecordTamper";
    }
    return "?";
  }

  BridgeError::BridgeError(BridgeErrc code, const std::string& detail) :
    std::runtime_error(detail),
    code_(code)
  {}

  Bytes encode_frame(const HandshakeMessage& msg)
  {
    return frame(message_type(msg), body_of(msg));
  }

  Bytes encode_frame(const EncryptedRecord& rec)
  {
    Bytes body;
    put_u64(body, rec.sequence);
    append(body, rec.ciphertext);
    return frame(MessageType::EncryptedRecord, body);
  }

  Frame decode_frame(ByteView bytes)
  {
    ByteReader r(bytes);
    try
    {
      const auto type = r.u8();
      const auto len = r.u16();
      if (r.remaining() != len)
        throw BridgeError(BridgeErrc::Malformed, "frame length mismatch");
      auto body = r.bytes(len);
      ByteReader b(body);

      auto finish = [&](auto msg) -> Frame {
        if (!b.at_end())
          throw BridgeError(BridgeErrc::Malformed, "trailing bytes in body");
        return HandshakeMessage(std::move(msg));
      };

      switch (static_cast<MessageType>(type))
      {
        case MessageType::ClientHello:
        {
          ClientHello ch;
          ch.client_random = take_array<32>(b);
          const auto n = b.u8();
          for (uint8_t i = 0; i < n; ++i)
            ch.cipher_list.push_back(b.u16());
          return finish(std::move(ch));
        }
        case MessageType::ServerHello:
        {
          ServerHello sh;
          sh.server_random = take_array<32>(b);
          sh.cipher_choice = b.u16();
          return finish(sh);
        }
        case MessageType::Certificate:
          return HandshakeMessage(Certificate{body});
        case MessageType::ServerHelloDone:
          return finish(ServerHelloDone{});
        case MessageType::ClientKeyExchange:
          // Length is checked by the state machine (MalformedKex).
          return HandshakeMessage(ClientKeyExchange{body});
        case MessageType::ChangeCipherSpec:
          return finish(ChangeCipherSpec{});
        case MessageType::Finished:
        {
          Finished fin;
          fin.transcript_mac = take_array<32>(b);
          return finish(fin);
        }
        case MessageType::EncryptedRecord:
        {
          EncryptedRecord rec;
          rec.sequence = b.u64();
          rec.ciphertext = b.rest();
          return rec;
        }
      }
      throw BridgeError(
        BridgeErrc::Malformed, "unknown frame type " + std::to_string(type));
    }
    catch (const ReadPastEnd&)
    {
      throw BridgeError(BridgeErrc::Malformed, "truncated frame");
    }
  }

  BridgeSession::BridgeSession(Role role, ByteView rng_seed) :
    role_(role),
    rng_(rng_seed, role == Role::Client ? "bridge-client" : "bridge-server")
  {}

  std::pair<BridgeSession, ClientHello> BridgeSession::client_start(
    Ipv4Address expected_ip, ipcert::TrustStore store, ByteView rng_seed)
  {
    BridgeSession s(Role::Client, rng_seed);
    s.expected_ip_ = expected_ip;
    s.store_ = std::move(store);

    ClientHello hello;
    hello.client_random = s.rng_.generate32();
    hello.cipher_list = {cipher_suite};
    s.client_random_ = hello.client_random;
    s.transcript_.update(encode_frame(hello));
    s.state_ = State::AwaitServerHello;
    s.flight_pos_ = 0;
    return {std::move(s), hello};
  }

  BridgeSession BridgeSession::server(ServerIdentity identity, ByteView rng_seed)
  {
    BridgeSession s(Role::Server, rng_seed);
    s.identity_ = std::move(identity);
    return s;
  }

  const std::vector<MessageType>& BridgeSession::expected_flight() const
  {
    if (role_ == Role::Client)
    {
      if (state_ == State::AwaitServerHello)
        return server_flight_1;
      if (state_ == State::AwaitFinished)
        return server_flight_2;
    }
    else
    {
      if (state_ == State::Idle)
        return client_flight_1;
      if (state_ == State::AwaitClientKex)
        return client_flight_2;
    }
    return nothing;
  }

  void BridgeSession::abort(
    AbortReason reason, std::optional<ipcert::CertRejection> cert)
  {
    last_error_ = reason;
    if (state_ == State::Aborted)
      return;
    state_ = State::Aborted;
    abort_ = Abort{reason, cert};
    wipe_secrets();
  }

  void BridgeSession::wipe_secrets()
  {
    if (secrets_)
      sodium_memzero(&*secrets_, sizeof(Secrets));
    secrets_.reset();
  }

  void BridgeSession::emit(Flight& out, HandshakeMessage msg)
  {
    transcript_.update(encode_frame(msg));
    out.push_back(std::move(msg));
  }

  void BridgeSession::derive_secrets(const crypto::Key32& shared)
  {
    Bytes salt(client_random_.begin(), client_random_.end());
    append(salt, server_random_);
    Bytes info = to_bytes("islandbridge v1");
    append(info, transcript_.digest());
    auto okm = crypto::hkdf_sha256(salt, shared, info, 128);

    Secrets s;
    std::copy(okm.begin(), okm.begin() + 32, s.client_write.begin());
    std::copy(okm.begin() + 32, okm.begin() + 64, s.server_write.begin());
    std::copy(okm.begin() + 64, okm.begin() + 96, s.client_mac.begin());
    std::copy(okm.begin() + 96, okm.begin() + 128, s.server_mac.begin());
    sodium_memzero(okm.data(), okm.size());
    secrets_ = s;
  }

  Flight BridgeSession::deliver(const HandshakeMessage& msg, int64_t now)
  {
    Bytes raw;
    try
    {
      raw = encode_frame(msg);
    }
    catch (const BridgeError&)
    {
      abort(AbortReason::MalformedMessage);
      return {};
    }
    return receive(msg, raw, now);
  }

  Flight BridgeSession::deliver_frame(ByteView bytes, int64_t now)
  {
    Frame f;
    try
    {
      f = decode_frame(bytes);
    }
    catch (const BridgeError&)
    {
      abort(AbortReason::MalformedMessage);
      return {};
    }
    auto msg = std::get_if<HandshakeMessage>(&f);
    if (!msg)
    {
      abort(AbortReason::OutOfOrder);
      return {};
    }
    return receive(*msg, bytes, now);
  }

  Flight BridgeSession::receive(
    const HandshakeMessage& msg, ByteView raw, int64_t now)
  {
    last_error_.reset();
    if (state_ == State::Aborted)
    {
      last_error_ = AbortReason::OutOfOrder;
      return {};
    }

    const auto& expected = expected_flight();
    if (flight_pos_ >= expected.size() || expected[flight_pos_] != message_type(msg))
    {
      abort(AbortReason::OutOfOrder);
      return {};
    }
    ++flight_pos_;

    return role_ == Role::Client ? on_client_message(msg, raw, now) :
                                   on_server_message(msg, raw);
  }

  Flight BridgeSession::on_client_message(
    const HandshakeMessage& msg, ByteView raw, int64_t now)
  {
    Flight out;
    if (auto sh = std::get_if<ServerHello>(&msg))
    {
      if (sh->cipher_choice != cipher_suite)
      {
        abort(AbortReason::NoCommonCipher);
        return {};
      }
      server_random_ = sh->server_random;
      transcript_.update(raw);
    }
    else if (auto cert = std::get_if<Certificate>(&msg))
    {
      peer_cert_bytes_ = cert->cert;
      transcript_.update(raw);
    }
    else if (std::holds_alternative<ServerHelloDone>(msg))
    {
      transcript_.update(raw);

      ipcert::IpCertificate parsed;
      try
      {
        parsed = ipcert::IpCertificate::decode(peer_cert_bytes_);
      }
      catch (const ipcert::CertError&)
      {
        abort(AbortReason::MalformedMessage);
        return {};
      }
      peer_cert_ = parsed;

      auto verdict = ipcert::verify_cert(parsed, expected_ip_, store_, now);
      if (!verdict.accepted())
      {
        abort(AbortReason::CertRejected, verdict.rejection);
        return {};
      }

      auto ephemeral = crypto::X25519KeyPair::from_seed(rng_.generate32());
      auto shared = crypto::x25519(ephemeral.secret_key, parsed.subject_public_key);
      sodium_memzero(ephemeral.secret_key.data(), ephemeral.secret_key.size());
      if (!shared)
      {
        abort(AbortReason::MalformedMessage);
        return {};
      }

      emit(
        out,
        ClientKeyExchange{Bytes(
          ephemeral.public_key.begin(), ephemeral.public_key.end())});
      derive_secrets(*shared);
      sodium_memzero(shared->data(), shared->size());
      emit(out, ChangeCipherSpec{});
      emit(out, Finished{crypto::hmac_sha256(secrets_->client_mac, transcript_.digest())});
      record_hash_ = transcript_.digest();

      state_ = State::AwaitFinished;
      flight_pos_ = 0;
    }
    else if (std::holds_alternative<ChangeCipherSpec>(msg))
    {
      transcript_.update(raw);
    }
    else if (auto fin = std::get_if<Finished>(&msg))
    {
      auto expected =
        crypto::hmac_sha256(secrets_->server_mac, transcript_.digest());
      if (!mac_equal(expected, fin->transcript_mac))
      {
        abort(AbortReason::TranscriptMismatch);
        return {};
      }
      transcript_.update(raw);
      state_ = State::Established;
      flight_pos_ = 0;
    }
    return out;
  }

  Flight BridgeSession::on_server_message(const HandshakeMessage& msg, ByteView raw)
  {
    Flight out;
    if (auto ch = std::get_if<ClientHello>(&msg))
    {
      transcript_.update(raw);
      bool offered = false;
      for (auto suite : ch->cipher_list)
        offered = offered || suite == cipher_suite;
      if (!offered)
      {
        abort(AbortReason::NoCommonCipher);
        return {};
      }
      client_random_ = ch->client_random;
      server_random_ = rng_.generate32();

      emit(out, ServerHello{server_random_, cipher_suite});
      emit(out, Certificate{identity_->certificate});
      emit(out, ServerHelloDone{});
      state_ = State::AwaitClientKex;
      flight_pos_ = 0;
    }
    else if (auto kex = std::get_if<ClientKeyExchange>(&msg))
    {
      if (kex->client_ephemeral_public.size() != 32)
      {
        abort(AbortReason::MalformedKex);
        return {};
      }
      transcript_.update(raw);
      auto shared =
        crypto::x25519(identity_->keypair.secret_key, kex->client_ephemeral_public);
      if (!shared)
      {
        abort(AbortReason::MalformedKex);
        return {};
      }
      derive_secrets(*shared);
      sodium_memzero(shared->data(), shared->size());
    }
    else if (std::holds_alternative<ChangeCipherSpec>(msg))
    {
      transcript_.update(raw);
    }
    else if (auto fin = std::get_if<Finished>(&msg))
    {
      auto expected =
        crypto::hmac_sha256(secrets_->client_mac, transcript_.digest());
      if (!mac_equal(expected, fin->transcript_mac))
      {
        abort(AbortReason::TranscriptMismatch);
        return {};
      }
      transcript_.update(raw);
      record_hash_ = transcript_.digest();
      emit(out, ChangeCipherSpec{});
      emit(out, Finished{crypto::hmac_sha256(secrets_->server_mac, transcript_.digest())});
      state_ = State::Established;
      flight_pos_ = 0;
    }
    return out;
  }

  Flight BridgeSession::wrapped(
    State entry, std::span<const HandshakeMessage> msgs, int64_t now)
  {
    if (state_ != entry)
    {
      abort(AbortReason::OutOfOrder);
      return {};
    }
    Flight reply;
    for (const auto& m : msgs)
    {
      reply = deliver(m, now);
      if (state_ == State::Aborted)
        return {};
    }
    // A partial flight leaves the session waiting for the rest.
    return reply;
  }

  Flight BridgeSession::server_respond(const ClientHello& hello)
  {
    HandshakeMessage m = hello;
    return wrapped(State::Idle, std::span(&m, 1), 0);
  }

  Flight BridgeSession::client_process_server_flight(
    std::span<const HandshakeMessage> msgs, int64_t now)
  {
    return wrapped(State::AwaitServerHello, msgs, now);
  }

  Flight BridgeSession::server_finish(std::span<const HandshakeMessage> msgs)
  {
    return wrapped(State::AwaitClientKex, msgs, 0);
  }

  void BridgeSession::client_finish(std::span<const HandshakeMessage> msgs)
  {
    wrapped(State::AwaitFinished, msgs, 0);
  }

  std::optional<TrafficKeys> BridgeSession::traffic_keys() const
  {
    if (state_ != State::Established || !secrets_)
      return std::nullopt;
    return TrafficKeys{secrets_->client_write, secrets_->server_write};
  }

  EncryptedRecord BridgeSession::seal(const wire::DnsMessage& msg)
  {
    // A client may send one flight early: its Finished is already out, so
    // the record hash is fixed even though the server's Finished is not in.
    const bool early =
      role_ == Role::Client && state_ == State::AwaitFinished;
    if (state_ != State::Established && !early)
      throw BridgeError(BridgeErrc::NotEstablished, "seal before handshake");
    const auto& key =
      role_ == Role::Client ? secrets_->client_write : secrets_->server_write;
    const uint64_t seq = send_seq_++;
    return EncryptedRecord{
      seq,
      crypto::aead_seal(
        key, nonce_for(seq), record_ad(record_hash_, seq), wire::encode(msg))};
  }

  wire::DnsMessage BridgeSession::open(const EncryptedRecord& rec)
  {
    if (state_ != State::Established)
      throw BridgeError(BridgeErrc::NotEstablished, "open before handshake");
    const auto& key =
      role_ == Role::Client ? secrets_->server_write : secrets_->client_write;

    std::optional<Bytes> plain;
    if (rec.sequence == recv_seq_)
      plain = crypto::aead_open(
        key,
        nonce_for(rec.sequence),
        record_ad(record_hash_, rec.sequence),
        rec.ciphertext);
    if (!plain)
    {
      abort(AbortReason::RecordTamper);
      throw BridgeError(BridgeErrc::AeadFailure, "record authentication failed");
    }
    ++recv_seq_;
    try
    {
      return wire::decode(*plain);
    }
    catch (const wire::WireError& e)
    {
      abort(AbortReason::RecordTamper);
      throw BridgeError(BridgeErrc::AeadFailure, e.what());
    }
  }
}
