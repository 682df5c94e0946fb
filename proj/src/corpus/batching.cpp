#include "aan/corpus/batching.hpp"

#include <algorithm>
#include <string>

#include "aan/errors.hpp"

namespace aan::corpus {

namespace {

/// `count` draws from `pool`: a shuffled pass first, then with replacement.
std::vector<std::size_t> draw(std::vector<std::size_t> pool, std::size_t count, Rng& rng) {
  rng.shuffle(pool.begin(), pool.end());
  if (pool.size() >= count) {
    pool.resize(count);
    return pool;
  }
  const auto n = pool.size();
  while (pool.size() < count) pool.push_back(pool[rng.index(n)]);
  return pool;
}

}  // namespace

std::vector<Batch> split_batches(std::span<const Origin> origins, std::size_t batch_size, bool balance, Rng& rng) {
  if (batch_size == 0) throw BatchSizeError("batch size must be positive");
  std::vector<Batch> batches;
  if (!balance) {
    std::vector<std::size_t> all(origins.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(all.begin(), all.end());
    for (std::size_t b = 0; b + batch_size <= all.size(); b += batch_size) {
      batches.emplace_back(all.begin() + long(b), all.begin() + long(b + batch_size));
    }
    return batches;
  }

  if (batch_size % 2 != 0) throw BatchSizeError("balanced batches need an even batch size, got " + std::to_string(batch_size));
  std::vector<std::size_t> src, tgt;
  for (std::size_t i = 0; i < origins.size(); ++i) (origins[i] == Origin::source ? src : tgt).push_back(i);
  if (src.empty() || tgt.empty()) throw BatchSizeError("balanced batches need both source and target documents");

  const std::size_t half = batch_size / 2;
  const std::size_t nb = std::max(src.size(), tgt.size()) / half;
  const auto s = draw(std::move(src), nb * half, rng);
  const auto t = draw(std::move(tgt), nb * half, rng);
  for (std::size_t b = 0; b < nb; ++b) {
    Batch batch(s.begin() + long(b * half), s.begin() + long((b + 1) * half));
    batch.insert(batch.end(), t.begin() + long(b * half), t.begin() + long((b + 1) * half));
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace aan::corpus
