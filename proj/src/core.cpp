#include "fedzero/core.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace fedzero {

int sign_scalar(double x) {
  if (x > 0.0) return 1;
  if (x < 0.0) return -1;
  return 0;
}

bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double dot(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("dot: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const ParamVector& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void axpy(double a, const ParamVector& x, ParamVector& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("axpy: dimension mismatch");
  }
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

MaskVector Partition::mask(int k) const {
  if (k < 0 || k >= block_count()) {
    throw std::invalid_argument("Partition::mask: block index out of range");
  }
  MaskVector m(dim, 0);
  for (int i : blocks[k]) m[i] = 1;
  return m;
}

Partition make_partition(int d, int K, PartitionMode mode, RngStream* rng) {
  if (d < 1) {
    throw std::invalid_argument("make_partition: d must be positive");
  }
  if (K < 1 || K > d) {
    throw std::invalid_argument("make_partition: K must satisfy 1 <= K <= d");
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  if (mode == PartitionMode::Shuffled) {
    if (rng == nullptr) {
      throw std::invalid_argument("make_partition: shuffled mode needs an rng");
    }
    for (int i = d - 1; i > 0; --i) {
      const int j = static_cast<int>(rng->uniform_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }
  }

  Partition p;
  p.dim = d;
  p.blocks.resize(K);
  const int base = d / K;
  const int remainder = d % K;  // earliest blocks get the extra element
  int pos = 0;
  for (int k = 0; k < K; ++k) {
    const int size = base + (k < remainder ? 1 : 0);
    p.blocks[k].assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
  }
  return p;
}

double block_sum_norm(const ParamVector& v, const Partition& p) {
  if (static_cast<int>(v.size()) != p.dim) {
    throw std::invalid_argument("block_sum_norm: dimension mismatch");
  }
  double total = 0.0;
  for (const auto& block : p.blocks) {
    double sq = 0.0;
    for (int i : block) sq += v[i] * v[i];
    total += std::sqrt(sq);
  }
  return total;
}

ParamVector mask_apply(const ParamVector& v, const MaskVector& m) {
  if (v.size() != m.size()) {
    throw std::invalid_argument("mask_apply: dimension mismatch");
  }
  ParamVector out(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (m[i]) out[i] = v[i];
  }
  return out;
}

}  // namespace fedzero
