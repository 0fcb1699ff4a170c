#include "fseg/protocol.hpp"

#include <array>
#include <cstring>

namespace fseg {

namespace {

std::array<uint32_t, 256> make_crc_table() {
    std::array<uint32_t, 256> table{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        table[i] = c;
    }
    return table;
}

const std::array<uint32_t, 256>& crc_table() {
    static const std::array<uint32_t, 256> table = make_crc_table();
    return table;
}

struct Writer {
    std::vector<uint8_t> buf;
    void u8(uint8_t v) { buf.push_back(v); }
    void u32(uint32_t v) {
        buf.push_back(static_cast<uint8_t>(v));
        buf.push_back(static_cast<uint8_t>(v >> 8));
        buf.push_back(static_cast<uint8_t>(v >> 16));
        buf.push_back(static_cast<uint8_t>(v >> 24));
    }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void floats(const std::vector<float>& vs) {
        u32(static_cast<uint32_t>(vs.size()));
        for (float v : vs) f32(v);
    }
};

struct Reader {
    const uint8_t* p;
    size_t remaining;
    uint8_t u8() {
        if (remaining < 1) throw DecodeError(DecodeErrorKind::Truncated, "payload underrun");
        --remaining;
        return *p++;
    }
    uint32_t u32() {
        if (remaining < 4) throw DecodeError(DecodeErrorKind::Truncated, "payload underrun");
        uint32_t v = static_cast<uint32_t>(p[0]) | static_cast<uint32_t>(p[1]) << 8 |
                     static_cast<uint32_t>(p[2]) << 16 | static_cast<uint32_t>(p[3]) << 24;
        p += 4;
        remaining -= 4;
        return v;
    }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::vector<float> floats() {
        const uint32_t n = u32();
        if (remaining < static_cast<size_t>(n) * 4)
            throw DecodeError(DecodeErrorKind::BadLength, "float array exceeds payload");
        std::vector<float> vs(n);
        for (uint32_t i = 0; i < n; ++i) vs[i] = f32();
        return vs;
    }
    void expect_end() const {
        if (remaining != 0)
            throw DecodeError(DecodeErrorKind::BadLength, "trailing bytes in payload");
    }
};

} // namespace

uint32_t crc32_ieee(const uint8_t* data, size_t len) {
    const auto& table = crc_table();
    uint32_t crc = 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return ~crc;
}

uint32_t crc32_ieee(const std::vector<uint8_t>& data) {
    return crc32_ieee(data.data(), data.size());
}

MessageType message_type(const ProtocolMessage& msg) {
    switch (msg.index()) {
        case 0: return MessageType::Register;
        case 1: return MessageType::GlobalParams;
        case 2: return MessageType::LocalParams;
        case 3: return MessageType::Done;
        default: return MessageType::Shutdown;
    }
}

std::vector<uint8_t> encode_message(const ProtocolMessage& msg) {
    Writer payload;
    if (const auto* r = std::get_if<RegisterMsg>(&msg)) {
        payload.u32(r->site_id);
        payload.u32(r->n_drl);
        payload.u32(r->n_rm);
    } else if (const auto* g = std::get_if<GlobalParamsMsg>(&msg)) {
        payload.u32(g->round);
        payload.floats(g->drl);
        payload.floats(g->rm);
    } else if (const auto* l = std::get_if<LocalParamsMsg>(&msg)) {
        payload.u32(l->site_id);
        payload.u32(l->round);
        payload.f32(l->train_loss);
        payload.floats(l->drl);
        payload.floats(l->rm);
    } else if (const auto* d = std::get_if<DoneMsg>(&msg)) {
        payload.u32(d->final_round);
    }
    if (payload.buf.size() > kMaxPayload)
        throw std::invalid_argument("encode: payload exceeds 2^28 bytes");

    Writer frame;
    frame.u32(kProtocolMagic);
    frame.u8(kProtocolVersion);
    frame.u8(static_cast<uint8_t>(message_type(msg)));
    frame.u32(static_cast<uint32_t>(payload.buf.size()));
    frame.buf.insert(frame.buf.end(), payload.buf.begin(), payload.buf.end());
    // crc over version..payload
    const uint32_t crc = crc32_ieee(frame.buf.data() + 4, frame.buf.size() - 4);
    frame.u32(crc);
    return frame.buf;
}

ProtocolMessage decode_message(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 14) throw DecodeError(DecodeErrorKind::Truncated, "frame shorter than header");
    Reader hdr{bytes.data(), bytes.size()};
    const uint32_t magic = hdr.u32();
    if (magic != kProtocolMagic) throw DecodeError(DecodeErrorKind::BadMagic, "bad magic");
    const uint8_t version = hdr.u8();
    const uint8_t type = hdr.u8();
    const uint32_t len = hdr.u32();
    if (len > kMaxPayload) throw DecodeError(DecodeErrorKind::BadLength, "payload length overflow");
    if (bytes.size() != 14 + static_cast<size_t>(len))
        throw DecodeError(DecodeErrorKind::BadLength, "frame length mismatch");

    const uint32_t stored_crc = static_cast<uint32_t>(bytes[10 + len]) |
                                static_cast<uint32_t>(bytes[11 + len]) << 8 |
                                static_cast<uint32_t>(bytes[12 + len]) << 16 |
                                static_cast<uint32_t>(bytes[13 + len]) << 24;
    const uint32_t actual_crc = crc32_ieee(bytes.data() + 4, 6 + static_cast<size_t>(len));
    if (stored_crc != actual_crc)
        throw DecodeError(DecodeErrorKind::BadChecksum, "checksum mismatch");
    if (version != kProtocolVersion)
        throw DecodeError(DecodeErrorKind::BadVersion, "unknown version");

    Reader r{bytes.data() + 10, len};
    switch (static_cast<MessageType>(type)) {
        case MessageType::Register: {
            RegisterMsg m;
            m.site_id = r.u32();
            m.n_drl = r.u32();
            m.n_rm = r.u32();
            r.expect_end();
            return m;
        }
        case MessageType::GlobalParams: {
            GlobalParamsMsg m;
            m.round = r.u32();
            m.drl = r.floats();
            m.rm = r.floats();
            r.expect_end();
            return m;
        }
        case MessageType::LocalParams: {
            LocalParamsMsg m;
            m.site_id = r.u32();
            m.round = r.u32();
            m.train_loss = r.f32();
            m.drl = r.floats();
            m.rm = r.floats();
            r.expect_end();
            return m;
        }
        case MessageType::Done: {
            DoneMsg m;
            m.final_round = r.u32();
            r.expect_end();
            return m;
        }
        case MessageType::Shutdown: {
            if (len != 0) throw DecodeError(DecodeErrorKind::BadLength, "shutdown carries payload");
            return ShutdownMsg{};
        }
        default:
            throw DecodeError(DecodeErrorKind::BadType, "unknown message type");
    }
}

} // namespace fseg
