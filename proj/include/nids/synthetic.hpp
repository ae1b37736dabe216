// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "nids/preprocess.hpp"

namespace nids::synthetic {

// Balanced [T x n] windows with values in [0, 1]. Background is a slow
// random walk plus noise; every class-1 window carries a two-step transient
// spike on a random subset of features at a random time.
std::vector<SequenceWindow> spike_windows(std::size_t count, int window, int features,
                                          std::uint64_t seed);

struct NetflowOptions {
  std::size_t rows = 5000;
  double benign_fraction = 0.0231;
  std::uint64_t seed = 7;
  bool with_labels = true;
};

// Writes an NF-BoT-IoT-layout CSV (header included): IPv4 endpoints, ports,
// protocol, L7 protocol, byte/packet counters, TCP flags and duration, plus
// Label and Attack unless with_labels is false. Attack traffic arrives in
// campaigns (DDoS, DoS, Reconnaissance, Theft); benign flows are scattered
// through the stream at exactly round(rows * benign_fraction) positions.
void write_netflow_csv(std::ostream& out, const NetflowOptions& options);

}  // namespace nids::synthetic
