#include <algorithm>
#include <numeric>
#include <random>

#include "hli/data.hpp"
#include "hli/error.hpp"

namespace hli {

BatchSchedule::BatchSchedule(std::size_t record_count, std::size_t batch_size, std::uint64_t seed)
    : records_(record_count), batch_(batch_size), seed_(seed) {
  if (record_count == 0) throw DataError("cannot batch an empty shard");
  if (batch_size == 0) throw DataError("batch size must be >= 1");
}

std::vector<std::size_t> BatchSchedule::epoch_order(std::uint64_t epoch) const {
  std::vector<std::size_t> order(records_);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::vector<std::size_t>> BatchSchedule::epoch_batches(std::uint64_t epoch) const {
  const auto order = epoch_order(epoch);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t start = 0; start < order.size(); start += batch_) {
    const std::size_t end = std::min(order.size(), start + batch_);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

std::vector<std::size_t> BatchSchedule::batch_at(std::uint64_t step) {
  const std::uint64_t per_epoch = batches_per_epoch();
  const std::uint64_t epoch = step / per_epoch;
  if (epoch != cached_epoch_) {
    cached_order_ = epoch_order(epoch);
    cached_epoch_ = epoch;
  }
  const std::size_t start = static_cast<std::size_t>(step % per_epoch) * batch_;
  const std::size_t end = std::min(cached_order_.size(), start + batch_);
  return {cached_order_.begin() + static_cast<std::ptrdiff_t>(start), cached_order_.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<std::vector<std::size_t>> batch_iterator(std::size_t record_count, std::size_t batch_size,
                                                     std::uint64_t seed, std::uint64_t epoch) {
  return BatchSchedule(record_count, batch_size, seed).epoch_batches(epoch);
}

}  // namespace hli
