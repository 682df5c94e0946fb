#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aan/corpus/document.hpp"
#include "aan/rng.hpp"

namespace aan::corpus {

using Batch = std::vector<std::size_t>;

/// Splits documents (given by origin) into index batches for one epoch.
///
/// Balanced: every batch holds batch_size/2 source and batch_size/2 target
/// indices, source first. The epoch has floor(max(nS, nT) / (batch_size/2))
/// batches; the shorter side is drawn without replacement until exhausted and
/// with replacement after that. Unbalanced: plain shuffled batches. The
/// trailing remainder is dropped in both modes.
std::vector<Batch> split_batches(std::span<const Origin> origins, std::size_t batch_size, bool balance, Rng& rng);

}  // namespace aan::corpus
