#pragma once

#include <cstdint>
#include <string>

#include "fseg/network.hpp"

namespace fseg {

// Checkpoint = raw parameter blob (<prefix>.params) + a small text header
// (<prefix>.meta) keyed by an architecture hash so mismatched loads fail.
void save_checkpoint(const Network& net, const std::string& prefix, int64_t steps = 0);

// Throws std::runtime_error on missing files or a checkpoint/spec mismatch.
void load_checkpoint(Network& net, const std::string& prefix);

uint32_t arch_hash(const Network& net);

} // namespace fseg
