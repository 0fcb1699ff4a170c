#include "fseg/fednet.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <stdexcept>

#include "fseg/protocol.hpp"

namespace fseg {

namespace {

struct Socket {
    int fd = -1;
    Socket() = default;
    explicit Socket(int f) : fd(f) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& o) noexcept : fd(o.fd) { o.fd = -1; }
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            close_fd();
            fd = o.fd;
            o.fd = -1;
        }
        return *this;
    }
    ~Socket() { close_fd(); }
    void close_fd() {
        if (fd >= 0) {
            ::close(fd);
            fd = -1;
        }
    }
    bool valid() const { return fd >= 0; }
};

void set_recv_timeout(int fd, int seconds) {
    timeval tv{};
    tv.tv_sec = seconds;
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
}

void write_all(int fd, const uint8_t* data, size_t len) {
    size_t off = 0;
    while (off < len) {
        const ssize_t n = ::send(fd, data + off, len - off, MSG_NOSIGNAL);
        if (n <= 0) throw std::runtime_error("fednet: send failed");
        off += static_cast<size_t>(n);
    }
}

void read_exact(int fd, uint8_t* data, size_t len) {
    size_t off = 0;
    while (off < len) {
        const ssize_t n = ::recv(fd, data + off, len - off, 0);
        if (n == 0) throw std::runtime_error("fednet: peer disconnected");
        if (n < 0) throw std::runtime_error("fednet: recv failed");
        off += static_cast<size_t>(n);
    }
}

void send_message(int fd, const ProtocolMessage& msg) {
    const std::vector<uint8_t> bytes = encode_message(msg);
    write_all(fd, bytes.data(), bytes.size());
}

ProtocolMessage recv_message(int fd) {
    std::vector<uint8_t> frame(10);
    read_exact(fd, frame.data(), 10);
    const uint32_t len = static_cast<uint32_t>(frame[6]) | static_cast<uint32_t>(frame[7]) << 8 |
                         static_cast<uint32_t>(frame[8]) << 16 |
                         static_cast<uint32_t>(frame[9]) << 24;
    if (len > kMaxPayload) throw DecodeError(DecodeErrorKind::BadLength, "length overflow");
    frame.resize(14 + static_cast<size_t>(len));
    read_exact(fd, frame.data() + 10, static_cast<size_t>(len) + 4);
    return decode_message(frame);
}

Socket make_listener(const std::string& host, uint16_t port, uint16_t& bound_port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw std::runtime_error("fednet: socket() failed");
    const int one = 1;
    setsockopt(s.fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("fednet: bad listen address " + host);
    if (::bind(s.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw std::runtime_error("fednet: bind failed on " + host + ":" + std::to_string(port));
    if (::listen(s.fd, 16) != 0) throw std::runtime_error("fednet: listen failed");
    sockaddr_in actual{};
    socklen_t alen = sizeof(actual);
    getsockname(s.fd, reinterpret_cast<sockaddr*>(&actual), &alen);
    bound_port = ntohs(actual.sin_port);
    return s;
}

Socket connect_to(const std::string& host, uint16_t port) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s.valid()) throw std::runtime_error("fednet: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw std::runtime_error("fednet: bad address " + host);
    if (::connect(s.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw std::runtime_error("fednet: connect failed to " + host + ":" + std::to_string(port));
    return s;
}

struct SiteConn {
    Socket sock;
    SiteWeight weight;
};

// reject anything knocking on the listener with a SHUTDOWN reply
void drain_late_registrations(int listener_fd) {
    for (;;) {
        pollfd pfd{listener_fd, POLLIN, 0};
        if (::poll(&pfd, 1, 0) <= 0 || !(pfd.revents & POLLIN)) return;
        Socket late(::accept(listener_fd, nullptr, nullptr));
        if (!late.valid()) return;
        try {
            set_recv_timeout(late.fd, 5);
            (void)recv_message(late.fd); // their REGISTER
            send_message(late.fd, ShutdownMsg{});
        } catch (const std::exception&) {
        }
    }
}

} // namespace

CoordinatorResult coordinator_serve(const CoordinatorOptions& opts, const RoundPolicy& policy,
                                    GlobalModel initial,
                                    const std::function<void(uint16_t)>& on_listening) {
    if (opts.expected_sites < 1)
        throw std::invalid_argument("coordinator: expected_sites must be >= 1");

    uint16_t bound = 0;
    Socket listener = make_listener(opts.host, opts.port, bound);
    if (on_listening) on_listening(bound);

    // registration barrier: accept until all expected sites joined
    std::vector<SiteConn> sites;
    while (sites.size() < static_cast<size_t>(opts.expected_sites)) {
        pollfd pfd{listener.fd, POLLIN, 0};
        const int r = ::poll(&pfd, 1, opts.timeout_sec * 1000);
        if (r <= 0)
            throw std::runtime_error("coordinator: timed out waiting for registrations (" +
                                     std::to_string(sites.size()) + "/" +
                                     std::to_string(opts.expected_sites) + ")");
        Socket conn(::accept(listener.fd, nullptr, nullptr));
        if (!conn.valid()) continue;
        set_recv_timeout(conn.fd, opts.timeout_sec);
        const int one = 1;
        setsockopt(conn.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        ProtocolMessage msg = recv_message(conn.fd);
        const auto* reg = std::get_if<RegisterMsg>(&msg);
        if (!reg) throw std::runtime_error("coordinator: expected REGISTER");
        const bool duplicate =
            std::any_of(sites.begin(), sites.end(), [&](const SiteConn& s) {
                return s.weight.site_id == static_cast<int>(reg->site_id);
            });
        if (duplicate) {
            send_message(conn.fd, ShutdownMsg{}); // reject
            continue;
        }
        sites.push_back(SiteConn{std::move(conn),
                                 SiteWeight{static_cast<int>(reg->site_id), reg->n_drl, reg->n_rm}});
    }
    std::sort(sites.begin(), sites.end(), [](const SiteConn& a, const SiteConn& b) {
        return a.weight.site_id < b.weight.site_id;
    });

    std::vector<SiteWeight> weights;
    for (const SiteConn& s : sites) weights.push_back(s.weight);
    const auto [alpha, beta] = weights_normalize(weights);

    CoordinatorResult result;
    result.model = std::move(initial);
    for (int round = 1; round <= policy.max_rounds; ++round) {
        drain_late_registrations(listener.fd);

        GlobalParamsMsg broadcast;
        broadcast.round = static_cast<uint32_t>(round);
        broadcast.drl = result.model.theta_cdrl.values;
        broadcast.rm = result.model.theta_crm.values;
        for (SiteConn& s : sites) send_message(s.sock.fd, broadcast);

        // barrier: every site must report back before any aggregation
        std::vector<LocalParamsMsg> locals(sites.size());
        for (size_t i = 0; i < sites.size(); ++i) {
            ProtocolMessage msg = recv_message(sites[i].sock.fd);
            auto* lp = std::get_if<LocalParamsMsg>(&msg);
            if (!lp) throw std::runtime_error("coordinator: expected LOCAL_PARAMS");
            if (lp->round != static_cast<uint32_t>(round) ||
                lp->site_id != static_cast<uint32_t>(sites[i].weight.site_id))
                throw std::runtime_error("coordinator: out-of-order LOCAL_PARAMS");
            locals[i] = std::move(*lp);
        }

        std::vector<ParameterVector> drl_pvs(sites.size()), rm_pvs(sites.size());
        std::vector<const ParameterVector*> drl_ptrs(sites.size()), rm_ptrs(sites.size());
        for (size_t i = 0; i < sites.size(); ++i) {
            if (locals[i].drl.size() != result.model.theta_cdrl.values.size() ||
                locals[i].rm.size() != result.model.theta_crm.values.size())
                throw std::runtime_error("coordinator: site returned mismatched params");
            drl_pvs[i] = result.model.theta_cdrl;
            drl_pvs[i].values = std::move(locals[i].drl);
            rm_pvs[i] = result.model.theta_crm;
            rm_pvs[i].values = std::move(locals[i].rm);
            drl_ptrs[i] = &drl_pvs[i];
            rm_ptrs[i] = &rm_pvs[i];
        }
        result.model.theta_cdrl = aggregate(drl_ptrs, alpha);
        result.model.theta_crm = aggregate(rm_ptrs, beta);
        result.model.round = round;
        result.rounds = round;

        double loss = 0.0;
        for (size_t i = 0; i < sites.size(); ++i)
            loss += alpha[i] * static_cast<double>(locals[i].train_loss);
        result.round_losses.push_back(loss);

        if (saturation_check(result.round_losses, policy)) break;
    }

    for (SiteConn& s : sites) {
        send_message(s.sock.fd, DoneMsg{static_cast<uint32_t>(result.rounds)});
        send_message(s.sock.fd, ShutdownMsg{});
    }
    return result;
}

int site_client_run(const std::string& host, uint16_t port, const SiteWeight& identity,
                    const SiteRoundTrainer& trainer, int timeout_sec) {
    Socket sock = connect_to(host, port);
    set_recv_timeout(sock.fd, timeout_sec);
    const int one = 1;
    setsockopt(sock.fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));

    send_message(sock.fd, RegisterMsg{static_cast<uint32_t>(identity.site_id), identity.n_drl,
                                      identity.n_rm});
    bool trained_any = false;
    for (;;) {
        ProtocolMessage msg = recv_message(sock.fd);
        if (const auto* gp = std::get_if<GlobalParamsMsg>(&msg)) {
            SiteLocalResult local = trainer(static_cast<int>(gp->round), gp->drl, gp->rm);
            LocalParamsMsg reply;
            reply.site_id = static_cast<uint32_t>(identity.site_id);
            reply.round = gp->round;
            reply.train_loss = local.train_loss;
            reply.drl = std::move(local.drl);
            reply.rm = std::move(local.rm);
            send_message(sock.fd, reply);
            trained_any = true;
        } else if (const auto* done = std::get_if<DoneMsg>(&msg)) {
            return static_cast<int>(done->final_round);
        } else if (std::holds_alternative<ShutdownMsg>(msg)) {
            if (!trained_any)
                throw std::runtime_error("site: registration rejected by coordinator");
            return 0; // shutdown without DONE: treat as an orderly end
        } else {
            throw std::runtime_error("site: unexpected message from coordinator");
        }
    }
}

} // namespace fseg
