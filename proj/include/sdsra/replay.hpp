#pragma once

#include <span>
#include <vector>

#include "sdsra/random.hpp"
#include "sdsra/sac.hpp"

namespace sdsra {

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_state;
  bool done = false;
  std::size_t skill_index = 0;
};

/// Fixed-capacity FIFO ring of transitions with uniform sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t action_dim);

  void store(const Transition& t);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  /// i-th oldest stored transition.
  Transition at(std::size_t i) const;

  /// Uniform draws with replacement; values are storage slots for gather().
  std::vector<std::size_t> sample_slots(Random& rng, std::size_t n) const;
  TransitionBatch gather(std::span<const std::size_t> slots) const;

 private:
  Transition slot(std::size_t s) const;

  std::size_t capacity_;
  std::size_t state_dim_;
  std::size_t action_dim_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  std::vector<double> states_, actions_, rewards_, next_states_, dones_;
  std::vector<std::size_t> skills_;
};

}  // namespace sdsra
