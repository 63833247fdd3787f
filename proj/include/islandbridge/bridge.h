// Copyright (c) The IslandBridge Authors. All rights reserved.
// Licensed under the Apache 2.0 License.

#pragma once

#include "islandbridge/crypto.h"
#include "islandbridge/ipcert.h"
#include "islandbridge/wire.h"

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

// Authenticated channel between a resolver and a bridge-capable nameserver.
//
// Handshake, in order:
//   client -> server   ClientHello
//   server -> client   ServerHello, Certificate, ServerHelloDone
//   client -> server   ClientKeyExchange, ChangeCipherSpec, Finished
//   server -> client   ChangeCipherSpec, Finished
//
// Frame layout: u8 type | u16 body length | body (big-endian integers).
//
//   ClientHello (1)        client_random[32] | u8 n | u16 suite[n]
//   ServerHello (2)        server_random[32] | u16 suite
//   Certificate (11)       encoded IpCertificate
//   ServerHelloDone (14)   empty
//   ClientKeyExchange (16) client ephemeral X25519 public key (32 bytes)
//   Finished (20)          HMAC-SHA256 verify data (32 bytes)
//   ChangeCipherSpec (129) empty
//   EncryptedRecord (23)   u64 sequence | ChaCha20-Poly1305 ciphertext
//
// The transcript hash is SHA-256 over the frames in the order above. Keys:
//   secrets = HKDF-SHA256(salt = client_random || server_random,
//                         ikm  = X25519(client ephemeral, server cert key),
//                         info = "islandbridge v1" || H(CH..CKE), 128 bytes)
// split into client_write, server_write, client_mac, server_mac. Each
// Finished is HMAC(mac key, transcript hash before that Finished).
// Records use per-direction keys, nonce = 0^4 || u64 sequence and
// associated data = record hash || u64 sequence, where the record hash is
// the transcript hash up to and including the client Finished. The client
// may seal its first record right behind its Finished, before the server
// Finished arrives; it cannot open anything until that Finished verifies.

namespace islandbridge::bridge
{
  constexpr uint16_t cipher_suite = 0xB001;

  enum class MessageType : uint8_t
  {
    ClientHello = 1,
    ServerHello = 2,
    Certificate = 11,
    ServerHelloDone = 14,
    ClientKeyExchange = 16,
    Finished = 20,
    EncryptedRecord = 23,
    ChangeCipherSpec = 129,
  };

  struct ClientHello
  {
    crypto::Key32 client_random{};
    std::vector<uint16_t> cipher_list;
    friend bool operator==(const ClientHello&, const ClientHello&) = default;
  };

  struct ServerHello
  {
    crypto::Key32 server_random{};
    uint16_t cipher_choice = 0;
    friend bool operator==(const ServerHello&, const ServerHello&) = default;
  };

  struct Certificate
  {
    Bytes cert;
    friend bool operator==(const Certificate&, const Certificate&) = default;
  };

  struct ServerHelloDone
  {
    friend bool operator==(const ServerHelloDone&, const ServerHelloDone&) =
      default;
  };

  struct ClientKeyExchange
  {
    Bytes client_ephemeral_public;
    friend bool operator==(const ClientKeyExchange&, const ClientKeyExchange&) =
      default;
  };

  struct ChangeCipherSpec
  {
    friend bool operator==(const ChangeCipherSpec&, const ChangeCipherSpec&) =
      default;
  };

  struct Finished
  {
    crypto::Digest transcript_mac{};
    friend bool operator==(const Finished&, const Finished&) = default;
  };

  using HandshakeMessage = std::variant<
    ClientHello,
    ServerHello,
    Certificate,
    ServerHelloDone,
    ClientKeyExchange,
    ChangeCipherSpec,
    Finished>;

  using Flight = std::vector<HandshakeMessage>;

  MessageType message_type(const HandshakeMessage& msg);
  std::string_view to_string(MessageType type);

  struct EncryptedRecord
  {
    uint64_t sequence = 0;
    Bytes ciphertext;
    friend bool operator==(const EncryptedRecord&, const EncryptedRecord&) =
      default;
  };

  using Frame = std::variant<HandshakeMessage, EncryptedRecord>;

  Bytes encode_frame(const HandshakeMessage& msg);
  Bytes encode_frame(const EncryptedRecord& rec);
  /// Throws BridgeError(Malformed) on any framing or body-shape error.
  Frame decode_frame(ByteView bytes);

  enum class BridgeErrc
  {
    Malformed,
    NotEstablished,
    AeadFailure,
  };

  class BridgeError : public std::runtime_error
  {
  public:
    BridgeError(BridgeErrc code, const std::string& detail);

    BridgeErrc code() const
    {
      return code_;
    }

  private:
    BridgeErrc code_;
  };

  enum class Role
  {
    Client,
    Server,
  };

  enum class State
  {
    Idle,
    AwaitServerHello,
    AwaitClientKex,
    AwaitFinished,
    Established,
    Aborted,
  };

  std::string_view to_string(State s);

  enum class AbortReason
  {
    NoCommonCipher,
    CertRejected,
    TranscriptMismatch,
    MalformedKex,
    MalformedMessage,
    OutOfOrder,
    RecordTamper,
  };

  struct Abort
  {
    AbortReason reason;
    std::optional<ipcert::CertRejection> cert_rejection;

    std::string to_string() const;
    friend bool operator==(const Abort&, const Abort&) = default;
  };

  struct ServerIdentity
  {
    crypto::X25519KeyPair keypair;
    /// Encoded IpCertificate whose subject key is keypair.public_key.
    Bytes certificate;
  };

  struct TrafficKeys
  {
    crypto::Key32 client_write{};
    crypto::Key32 server_write{};
    friend bool operator==(const TrafficKeys&, const TrafficKeys&) = default;
  };

  /// One end of a bridge connection. Single-owner; not thread-safe.
  class BridgeSession
  {
  public:
    /// Client side: session in AwaitServerHello plus the hello to send.
    static std::pair<BridgeSession, ClientHello> client_start(
      Ipv4Address expected_ip, ipcert::TrustStore store, ByteView rng_seed);

    /// Server side: session in Idle, waiting for a ClientHello.
    static BridgeSession server(ServerIdentity identity, ByteView rng_seed);

    /// Server: ClientHello in, (ServerHello, Certificate, ServerHelloDone) out.
    Flight server_respond(const ClientHello& hello);

    /// Client: verifies the certificate against the expected IP and, if it
    /// is accepted, returns (ClientKeyExchange, ChangeCipherSpec, Finished).
    Flight client_process_server_flight(
      std::span<const HandshakeMessage> msgs, int64_t now);

    /// Server: (ClientKeyExchange, ChangeCipherSpec, Finished) in,
    /// (ChangeCipherSpec, Finished) out.
    Flight server_finish(std::span<const HandshakeMessage> msgs);

    /// Client: server's (ChangeCipherSpec, Finished).
    void client_finish(std::span<const HandshakeMessage> msgs);

    /// Feeds one message. Returns the reply flight when this message
    /// completes the peer's flight, otherwise nothing. Any message the state
    /// machine does not expect aborts the session with OutOfOrder.
    Flight deliver(const HandshakeMessage& msg, int64_t now = 0);

    /// As deliver(), from raw frame bytes; undecodable frames abort with
    /// MalformedMessage.
    Flight deliver_frame(ByteView frame, int64_t now = 0);

    /// Allowed when Established, and on the client in AwaitFinished.
    EncryptedRecord seal(const wire::DnsMessage& msg);
    wire::DnsMessage open(const EncryptedRecord& rec);

    Role role() const
    {
      return role_;
    }

    State state() const
    {
      return state_;
    }

    const std::optional<Abort>& abort_reason() const
    {
      return abort_;
    }

    /// Error from the most recent call, including calls rejected because
    /// the session had already aborted.
    std::optional<AbortReason> last_error() const
    {
      return last_error_;
    }

    bool has_handshake_secret() const
    {
      return secrets_.has_value();
    }

    std::optional<TrafficKeys> traffic_keys() const;

    const std::optional<ipcert::IpCertificate>& peer_certificate() const
    {
      return peer_cert_;
    }

  private:
    struct Secrets
    {
      crypto::Key32 client_write{};
      crypto::Key32 server_write{};
      crypto::Key32 client_mac{};
      crypto::Key32 server_mac{};
    };

    BridgeSession(Role role, ByteView rng_seed);

    Flight receive(const HandshakeMessage& msg, ByteView raw, int64_t now);
    Flight on_client_message(const HandshakeMessage& msg, ByteView raw, int64_t now);
    Flight on_server_message(const HandshakeMessage& msg, ByteView raw);
    Flight wrapped(
      State entry, std::span<const HandshakeMessage> msgs, int64_t now);
    void abort(AbortReason reason, std::optional<ipcert::CertRejection> cert = {});
    void emit(Flight& out, HandshakeMessage msg);
    void derive_secrets(const crypto::Key32& shared);
    void wipe_secrets();
    const std::vector<MessageType>& expected_flight() const;

    Role role_;
    State state_ = State::Idle;
    std::optional<Abort> abort_;
    std::optional<AbortReason> last_error_;
    crypto::Sha256 transcript_;
    crypto::Drbg rng_;
    size_t flight_pos_ = 0;

    Ipv4Address expected_ip_;
    ipcert::TrustStore store_;
    std::optional<ServerIdentity> identity_;

    crypto::Key32 client_random_{};
    crypto::Key32 server_random_{};
    Bytes peer_cert_bytes_;
    std::optional<ipcert::IpCertificate> peer_cert_;

    std::optional<Secrets> secrets_;
    crypto::Digest record_hash_{};
    uint64_t send_seq_ = 0;
    uint64_t recv_seq_ = 0;
  };
}
