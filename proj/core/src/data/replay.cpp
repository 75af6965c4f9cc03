#include <cmath>

#include "apc/data.hpp"

namespace apc::data {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
}

void ReplayBuffer::insert(Chunk chunk) {
  auto item = std::make_shared<const Chunk>(std::move(chunk));
  std::lock_guard lock(mutex_);
  if (items_.size() == capacity_) items_.pop_front();
  inserted_timesteps_ += item->valid;
  items_.push_back(std::move(item));
  ++inserted_chunks_;
}

std::vector<std::shared_ptr<const Chunk>> ReplayBuffer::sample(std::size_t batch, Rng& rng) {
  std::lock_guard lock(mutex_);
  if (items_.empty()) throw ReplayError("ReplayBuffer::sample: buffer is empty");
  std::uniform_int_distribution<std::size_t> pick(0, items_.size() - 1);
  std::vector<std::shared_ptr<const Chunk>> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(items_[pick(rng)]);
  sampled_chunks_ += batch;
  return out;
}

std::size_t ReplayBuffer::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::uint64_t ReplayBuffer::inserted_chunks() const {
  std::lock_guard lock(mutex_);
  return inserted_chunks_;
}

std::uint64_t ReplayBuffer::inserted_timesteps() const {
  std::lock_guard lock(mutex_);
  return inserted_timesteps_;
}

std::uint64_t ReplayBuffer::sampled_chunks() const {
  std::lock_guard lock(mutex_);
  return sampled_chunks_;
}

std::vector<std::shared_ptr<const Chunk>> ReplayBuffer::contents() const {
  std::lock_guard lock(mutex_);
  return {items_.begin(), items_.end()};
}

GateDecision rate_limiter_gate(const RateCounters& counters, const RateLimiterConfig& config) {
  if (!(config.updates_per_timestep > 0.0)) throw std::invalid_argument("rate limiter: target must be > 0");
  const double diff = static_cast<double>(counters.learner_updates) -
                      config.updates_per_timestep * static_cast<double>(counters.inserted_timesteps);
  const bool learner = diff + 1.0 <= 0.0;
  const bool actor = diff >= -config.error_buffer;
  if (learner && actor) return GateDecision::Both;
  return learner ? GateDecision::LearnerOnly : GateDecision::ActorOnly;
}

}  // namespace apc::data
