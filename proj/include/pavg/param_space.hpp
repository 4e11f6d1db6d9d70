#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace pavg {

// Flat model parameters of dimension d; the unit of averaging and slicing.
using ParameterVector = std::vector<double>;

bool all_finite(const ParameterVector& v);

// Decomposition of {0..d-1} into tau disjoint, non-empty index blocks.
// Immutable after construction; validated on every construction path.
class PartitionScheme {
public:
    // contiguous blocks, sizes differing by at most one (remainder goes to
    // the lowest-index blocks)
    static PartitionScheme contiguous(std::size_t d, std::size_t tau);

    // block j holds indices { i : i mod tau == j-1 }
    static PartitionScheme strided(std::size_t d, std::size_t tau);

    // arbitrary user-defined blocks; validated for disjointness and coverage
    static PartitionScheme from_blocks(std::size_t d, std::vector<std::vector<std::size_t>> blocks);

    std::size_t dim() const { return dim_; }
    std::size_t tau() const { return blocks_.size(); }

    // j is 1-based, matching the analysis indexing
    const std::vector<std::size_t>& block(std::size_t j) const;
    std::size_t block_size(std::size_t j) const { return block(j).size(); }

    const std::vector<std::vector<std::size_t>>& blocks() const { return blocks_; }

private:
    PartitionScheme(std::size_t d, std::vector<std::vector<std::size_t>> blocks);

    std::size_t dim_;
    std::vector<std::vector<std::size_t>> blocks_;
};

enum class PartitionStrategy { contiguous, strided };

PartitionScheme make_partition(PartitionStrategy s, std::size_t d, std::size_t tau);

// Iteration k (1-based) synchronizes partition ((k-1) mod tau) + 1, so every
// partition is averaged exactly once per tau consecutive iterations.
std::size_t active_partition(std::uint64_t k, std::size_t tau);

// Sub-vector of v at block j's indices, in block order.
ParameterVector slice(const ParameterVector& v, const PartitionScheme& scheme, std::size_t j);

// Inverse of slice: writes `values` back into dst at block j's indices.
void scatter(ParameterVector& dst, const PartitionScheme& scheme, std::size_t j,
             const ParameterVector& values);

} // namespace pavg
