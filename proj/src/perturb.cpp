#include "fedzero/perturb.hpp"

#include <stdexcept>

namespace fedzero {

PerturbationVector sample_rademacher(int d, RngStream& rng) {
  if (d < 1) {
    throw std::invalid_argument("sample_rademacher: d must be positive");
  }
  PerturbationVector v;
  v.kind = PerturbationKind::Binary;
  v.values.resize(d);
  std::uint64_t word = 0;
  for (int i = 0; i < d; ++i) {
    if (i % 64 == 0) word = rng.next_u64();
    v.values[i] = (word >> (i % 64)) & 1 ? 1.0 : -1.0;
  }
  return v;
}

PerturbationVector sample_gaussian(int d, RngStream& rng) {
  if (d < 1) {
    throw std::invalid_argument("sample_gaussian: d must be positive");
  }
  PerturbationVector v;
  v.kind = PerturbationKind::Gaussian;
  v.values.resize(d);
  for (int i = 0; i < d; ++i) v.values[i] = rng.normal();
  return v;
}

std::vector<std::uint8_t> encode_bits(const PerturbationVector& v) {
  if (v.kind != PerturbationKind::Binary) {
    throw std::invalid_argument("encode_bits: binary perturbations only");
  }
  const int d = v.dim();
  std::vector<std::uint8_t> bytes((d + 7) / 8, 0);
  for (int i = 0; i < d; ++i) {
    if (v.values[i] > 0.0) {
      bytes[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    }
  }
  return bytes;
}

PerturbationVector decode_bits(const std::vector<std::uint8_t>& bytes, int d) {
  if (d < 1) {
    throw std::invalid_argument("decode_bits: d must be positive");
  }
  if (static_cast<int>(bytes.size()) != (d + 7) / 8) {
    throw std::invalid_argument("decode_bits: byte count does not match d");
  }
  PerturbationVector v;
  v.kind = PerturbationKind::Binary;
  v.values.resize(d);
  for (int i = 0; i < d; ++i) {
    v.values[i] = (bytes[i / 8] >> (i % 8)) & 1 ? 1.0 : -1.0;
  }
  return v;
}

PerturbationVector mask_perturbation(const PerturbationVector& v,
                                     const Partition& p, int k) {
  if (v.dim() != p.dim) {
    throw std::invalid_argument("mask_perturbation: dimension mismatch");
  }
  if (k < 0 || k >= p.block_count()) {
    throw std::invalid_argument("mask_perturbation: block index out of range");
  }
  PerturbationVector out;
  out.kind = v.kind;
  out.values.assign(v.values.size(), 0.0);
  for (int i : p.blocks[k]) out.values[i] = v.values[i];
  return out;
}

}  // namespace fedzero
