#include "sdsra/replay.hpp"

#include <cmath>
#include <stdexcept>

#include "sdsra/errors.hpp"

namespace sdsra {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim)
    : capacity_(capacity), state_dim_(state_dim), action_dim_(action_dim) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
}

void ReplayBuffer::store(const Transition& t) {
  if (t.state.size() != state_dim_ || t.next_state.size() != state_dim_ || t.action.size() != action_dim_)
    throw ShapeError("ReplayBuffer::store: transition dimensions do not match the buffer");
  if (!std::isfinite(t.reward)) throw NumericError("ReplayBuffer::store: non-finite reward");

  if (size_ < capacity_ && next_ == size_) {
    states_.insert(states_.end(), t.state.begin(), t.state.end());
    actions_.insert(actions_.end(), t.action.begin(), t.action.end());
    next_states_.insert(next_states_.end(), t.next_state.begin(), t.next_state.end());
    rewards_.push_back(t.reward);
    dones_.push_back(t.done ? 1.0 : 0.0);
    skills_.push_back(t.skill_index);
  } else {
    std::copy(t.state.begin(), t.state.end(), states_.begin() + next_ * state_dim_);
    std::copy(t.action.begin(), t.action.end(), actions_.begin() + next_ * action_dim_);
    std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + next_ * state_dim_);
    rewards_[next_] = t.reward;
    dones_[next_] = t.done ? 1.0 : 0.0;
    skills_[next_] = t.skill_index;
  }
  next_ = (next_ + 1) % capacity_;
  if (size_ < capacity_) ++size_;
}

Transition ReplayBuffer::slot(std::size_t s) const {
  Transition t;
  t.state.assign(states_.begin() + s * state_dim_, states_.begin() + (s + 1) * state_dim_);
  t.action.assign(actions_.begin() + s * action_dim_, actions_.begin() + (s + 1) * action_dim_);
  t.next_state.assign(next_states_.begin() + s * state_dim_, next_states_.begin() + (s + 1) * state_dim_);
  t.reward = rewards_[s];
  t.done = dones_[s] != 0.0;
  t.skill_index = skills_[s];
  return t;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("ReplayBuffer::at: index past the stored count");
  const std::size_t oldest = size_ < capacity_ ? 0 : next_;
  return slot((oldest + i) % capacity_);
}

std::vector<std::size_t> ReplayBuffer::sample_slots(Random& rng, std::size_t n) const {
  if (size_ == 0) throw std::logic_error("ReplayBuffer::sample_slots: buffer is empty");
  std::vector<std::size_t> out(n);
  for (auto& s : out) s = rng.index(size_);
  return out;
}

TransitionBatch ReplayBuffer::gather(std::span<const std::size_t> slots) const {
  const auto b = static_cast<Eigen::Index>(slots.size());
  const auto ds = static_cast<Eigen::Index>(state_dim_);
  const auto da = static_cast<Eigen::Index>(action_dim_);
  TransitionBatch batch{Matrix(ds, b), Matrix(da, b), Vector(b), Matrix(ds, b), Vector(b)};
  for (Eigen::Index i = 0; i < b; ++i) {
    const auto s = slots[static_cast<std::size_t>(i)];
    if (s >= size_) throw std::out_of_range("ReplayBuffer::gather: slot not filled");
    batch.states.col(i) = Eigen::Map<const Vector>(states_.data() + s * state_dim_, ds);
    batch.actions.col(i) = Eigen::Map<const Vector>(actions_.data() + s * action_dim_, da);
    batch.next_states.col(i) = Eigen::Map<const Vector>(next_states_.data() + s * state_dim_, ds);
    batch.rewards(i) = rewards_[s];
    batch.dones(i) = dones_[s];
  }
  return batch;
}

}  // namespace sdsra
