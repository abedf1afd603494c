#pragma once

#include <cstdint>
#include <vector>

#include "fedzero/core.hpp"
#include "fedzero/rng.hpp"

namespace fedzero {

enum class PerturbationKind { Binary, Gaussian };

// A d-dimensional probe direction. Binary kind holds +-1 entries (Rademacher);
// the Gaussian baseline holds unit-variance normal entries. Masked copies may
// additionally contain exact zeros.
struct PerturbationVector {
  PerturbationKind kind = PerturbationKind::Binary;
  std::vector<double> values;

  int dim() const { return static_cast<int>(values.size()); }
};

// Each entry independently +-1 with probability 1/2. Entries are carved out
// of the stream 64 per word, bit i of word floor(i/64); this layout is part
// of the pinned generator contract.
PerturbationVector sample_rademacher(int d, RngStream& rng);

// i.i.d. standard normal entries, no renormalization.
PerturbationVector sample_gaussian(int d, RngStream& rng);

// Bit codec for binary perturbations: bit i of byte floor(i/8) encodes entry
// i, little-endian within the byte, 1 = +1. Trailing pad bits are zero.
std::vector<std::uint8_t> encode_bits(const PerturbationVector& v);
PerturbationVector decode_bits(const std::vector<std::uint8_t>& bytes, int d);

// Zero out every entry outside block k.
PerturbationVector mask_perturbation(const PerturbationVector& v,
                                     const Partition& p, int k);

}  // namespace fedzero
