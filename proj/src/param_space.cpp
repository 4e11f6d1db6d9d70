#include "pavg/param_space.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pavg {

bool all_finite(const ParameterVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

PartitionScheme::PartitionScheme(std::size_t d, std::vector<std::vector<std::size_t>> blocks)
    : dim_(d), blocks_(std::move(blocks)) {
    if (blocks_.empty()) throw std::invalid_argument("partition: needs at least one block");
    std::vector<char> seen(d, 0);
    std::size_t covered = 0;
    for (const auto& b : blocks_) {
        if (b.empty()) throw std::invalid_argument("partition: empty block");
        for (std::size_t i : b) {
            if (i >= d) throw std::invalid_argument("partition: index out of range");
            if (seen[i]) throw std::invalid_argument("partition: blocks overlap");
            seen[i] = 1;
            ++covered;
        }
    }
    if (covered != d) throw std::invalid_argument("partition: blocks do not cover 0..d-1");
}

PartitionScheme PartitionScheme::contiguous(std::size_t d, std::size_t tau) {
    if (tau == 0 || tau > d) throw std::invalid_argument("partition: need 1 <= tau <= d");
    const std::size_t base = d / tau;
    const std::size_t rem = d % tau;
    std::vector<std::vector<std::size_t>> blocks(tau);
    std::size_t next = 0;
    for (std::size_t j = 0; j < tau; ++j) {
        const std::size_t len = base + (j < rem ? 1 : 0);
        blocks[j].reserve(len);
        for (std::size_t i = 0; i < len; ++i) blocks[j].push_back(next++);
    }
    return PartitionScheme(d, std::move(blocks));
}

PartitionScheme PartitionScheme::strided(std::size_t d, std::size_t tau) {
    if (tau == 0 || tau > d) throw std::invalid_argument("partition: need 1 <= tau <= d");
    std::vector<std::vector<std::size_t>> blocks(tau);
    for (std::size_t i = 0; i < d; ++i) blocks[i % tau].push_back(i);
    return PartitionScheme(d, std::move(blocks));
}

PartitionScheme PartitionScheme::from_blocks(std::size_t d,
                                             std::vector<std::vector<std::size_t>> blocks) {
    return PartitionScheme(d, std::move(blocks));
}

const std::vector<std::size_t>& PartitionScheme::block(std::size_t j) const {
    if (j < 1 || j > blocks_.size()) throw std::out_of_range("partition: block index out of range");
    return blocks_[j - 1];
}

PartitionScheme make_partition(PartitionStrategy s, std::size_t d, std::size_t tau) {
    return s == PartitionStrategy::contiguous ? PartitionScheme::contiguous(d, tau)
                                              : PartitionScheme::strided(d, tau);
}

std::size_t active_partition(std::uint64_t k, std::size_t tau) {
    if (k < 1 || tau < 1) throw std::invalid_argument("active_partition: need k >= 1, tau >= 1");
    return static_cast<std::size_t>((k - 1) % tau) + 1;
}

ParameterVector slice(const ParameterVector& v, const PartitionScheme& scheme, std::size_t j) {
    const auto& idx = scheme.block(j);
    ParameterVector out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v.at(i));
    return out;
}

void scatter(ParameterVector& dst, const PartitionScheme& scheme, std::size_t j,
             const ParameterVector& values) {
    const auto& idx = scheme.block(j);
    if (values.size() != idx.size())
        throw std::invalid_argument("scatter: value length does not match block size");
    for (std::size_t i = 0; i < idx.size(); ++i) dst.at(idx[i]) = values[i];
}

} // namespace pavg
