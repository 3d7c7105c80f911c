#include <algorithm>
#include <unordered_set>

#include "drlir/actor_critic.hpp"
#include "drlir/error.hpp"

namespace drlir {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity), rng_(seed) {
  if (capacity == 0) throw ConfigError("replay buffer capacity must be > 0");
  items_.reserve(std::min<std::size_t>(capacity, 4096));
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
    return;
  }
  items_[head_] = std::move(t);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= items_.size()) throw LookupError("replay buffer index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size) {
  if (batch_size > items_.size()) return {};
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::unordered_set<std::size_t> taken;
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  while (out.size() < batch_size) {
    const std::size_t i = pick(rng_);
    if (taken.insert(i).second) out.push_back(i);
  }
  return out;
}

std::optional<std::vector<Transition>> ReplayBuffer::sample(std::size_t batch_size) {
  if (batch_size == 0 || batch_size > items_.size()) return std::nullopt;
  std::vector<Transition> batch;
  batch.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size)) batch.push_back(at(i));
  return batch;
}

}  // namespace drlir
