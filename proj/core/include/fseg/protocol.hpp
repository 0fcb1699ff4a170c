#pragma once

// Federation wire format. Frame layout (all integers little-endian):
//
//   magic   4B  0x46 0x53 0x45 0x47 ("FSEG")
//   version u8  = 1
//   type    u8  REGISTER=0x01 GLOBAL_PARAMS=0x02 LOCAL_PARAMS=0x03
//               DONE=0x04 SHUTDOWN=0x05
//   len     u32 payload byte count (max 2^28)
//   payload len bytes
//   crc32   u32 IEEE polynomial, over version..payload
//
// Payloads:
//   REGISTER      site_id u32, n_drl u32, n_rm u32
//   GLOBAL_PARAMS round u32, drl_len u32, drl f32*, rm_len u32, rm f32*
//   LOCAL_PARAMS  site_id u32, round u32, train_loss f32, then the same
//                 drl/rm parameter layout as GLOBAL_PARAMS
//   DONE          final_round u32
//   SHUTDOWN      (empty)
//
// The only payloads are parameter blobs, counts and losses; no message
// type can carry image data.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace fseg {

uint32_t crc32_ieee(const uint8_t* data, size_t len);
uint32_t crc32_ieee(const std::vector<uint8_t>& data);

constexpr uint32_t kProtocolMagic = 0x47455346u; // "FSEG" little-endian
constexpr uint8_t kProtocolVersion = 1;
constexpr uint32_t kMaxPayload = 1u << 28;

enum class MessageType : uint8_t {
    Register = 0x01,
    GlobalParams = 0x02,
    LocalParams = 0x03,
    Done = 0x04,
    Shutdown = 0x05,
};

struct RegisterMsg {
    uint32_t site_id = 0;
    uint32_t n_drl = 0;
    uint32_t n_rm = 0;
    bool operator==(const RegisterMsg&) const = default;
};

struct GlobalParamsMsg {
    uint32_t round = 0;
    std::vector<float> drl;
    std::vector<float> rm;
    bool operator==(const GlobalParamsMsg&) const = default;
};

struct LocalParamsMsg {
    uint32_t site_id = 0;
    uint32_t round = 0;
    float train_loss = 0.0f;
    std::vector<float> drl;
    std::vector<float> rm;
    bool operator==(const LocalParamsMsg&) const = default;
};

struct DoneMsg {
    uint32_t final_round = 0;
    bool operator==(const DoneMsg&) const = default;
};

struct ShutdownMsg {
    bool operator==(const ShutdownMsg&) const = default;
};

using ProtocolMessage =
    std::variant<RegisterMsg, GlobalParamsMsg, LocalParamsMsg, DoneMsg, ShutdownMsg>;

enum class DecodeErrorKind {
    BadMagic,
    BadVersion,
    BadType,
    BadLength,
    BadChecksum,
    Truncated,
};

struct DecodeError : std::runtime_error {
    DecodeErrorKind kind;
    DecodeError(DecodeErrorKind k, const std::string& what)
        : std::runtime_error(what), kind(k) {}
};

MessageType message_type(const ProtocolMessage& msg);

std::vector<uint8_t> encode_message(const ProtocolMessage& msg);

// Decodes one complete frame; the buffer must contain exactly one frame.
// Throws DecodeError with a distinct kind per failure mode.
ProtocolMessage decode_message(const std::vector<uint8_t>& bytes);

} // namespace fseg
