#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "fseg/fed.hpp"

namespace fseg {

// Synchronous-round parameter server over a reliable stream transport.
// Flow: sites REGISTER; per round the coordinator broadcasts GLOBAL_PARAMS
// (ascending site_id), barrier-waits for every LOCAL_PARAMS, aggregates;
// on stop it sends DONE then SHUTDOWN. Late or duplicate registrations are
// rejected with a SHUTDOWN reply. A site disconnect mid-round aborts the
// run (no partial aggregation).

struct CoordinatorOptions {
    std::string host = "127.0.0.1";
    uint16_t port = 0; // 0 = ephemeral, see bound_port
    int expected_sites = 1;
    int timeout_sec = 300; // registration and per-message receive timeout
};

struct CoordinatorResult {
    GlobalModel model;
    std::vector<double> round_losses;
    int rounds = 0;
};

// Notifier runs once the listener is bound (test/CLI synchronization hook).
CoordinatorResult coordinator_serve(const CoordinatorOptions& opts, const RoundPolicy& policy,
                                    GlobalModel initial,
                                    const std::function<void(uint16_t bound_port)>& on_listening = {});

// The per-round trainer receives raw parameter floats from the wire.
using SiteRoundTrainer =
    std::function<SiteLocalResult(int round, const std::vector<float>& drl,
                                  const std::vector<float>& rm)>;

// Connects, registers, trains per round until DONE. Returns the final round
// count. Throws std::runtime_error when rejected or on transport errors.
int site_client_run(const std::string& host, uint16_t port, const SiteWeight& identity,
                    const SiteRoundTrainer& trainer, int timeout_sec = 300);

} // namespace fseg
