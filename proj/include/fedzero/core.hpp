#pragma once

#include <cstdint>
#include <vector>

#include "fedzero/rng.hpp"

namespace fedzero {

// Flat policy parameter vector. Fixed length, finite entries.
using ParamVector = std::vector<double>;

// Binary mask over coordinates; entry i is 1 iff coordinate i belongs to the
// block the mask represents.
using MaskVector = std::vector<std::uint8_t>;

// sign with sign[0] = 0.
int sign_scalar(double x);

bool all_finite(const ParamVector& v);

double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& v);

// y += a * x
void axpy(double a, const ParamVector& x, ParamVector& y);

// Disjoint cover of coordinates {0..dim-1} into blocks whose sizes differ by
// at most one. Indices are 0-based internally; file formats and docs use
// 1-based indices.
struct Partition {
  int dim = 0;
  std::vector<std::vector<int>> blocks;

  int block_count() const { return static_cast<int>(blocks.size()); }
  MaskVector mask(int k) const;
};

enum class PartitionMode { Contiguous, Shuffled };

// Contiguous: indices in order, the first (d mod K) blocks one element
// larger. Shuffled: a Fisher-Yates permutation of the indices first, then
// the contiguous assignment.
Partition make_partition(int d, int K, PartitionMode mode,
                         RngStream* rng = nullptr);

// Sum over blocks of the per-block Euclidean norms.
double block_sum_norm(const ParamVector& v, const Partition& p);

// Entry-wise product with the mask; entries outside the mask are exactly 0.
ParamVector mask_apply(const ParamVector& v, const MaskVector& m);

}  // namespace fedzero
