#pragma once

#include <qdrl/common.hpp>
#include <qdrl/env.hpp>
#include <qdrl/rng.hpp>

#include <span>
#include <vector>

namespace qdrl {

/// Column-per-transition batch, ready for the batched network passes.
struct TransitionBatch {
    Mat states;
    Mat actions;
    Vec rewards;
    Mat next_states;
    Vec done;  // 1.0 at time-out; kept for completeness, targets still bootstrap
    Mat observed_descriptors;
    Mat target_descriptors;

    Index size() const { return states.cols(); }
};

/// Fixed-capacity ring buffer over descriptor-augmented transitions, stored
/// column-wise. Oldest entries are overwritten first.
class ReplayBuffer {
  public:
    ReplayBuffer(Index state_dim, Index action_dim, Index descriptor_dim, Index capacity)
        : states_(state_dim, capacity),
          actions_(action_dim, capacity),
          rewards_(capacity),
          next_states_(state_dim, capacity),
          done_(capacity),
          observed_(descriptor_dim, capacity),
          targets_(descriptor_dim, capacity) {
        require(capacity >= 1, "ReplayBuffer: capacity must be >= 1");
    }

    Index size() const { return size_; }
    Index capacity() const { return rewards_.size(); }
    Index state_dim() const { return states_.rows(); }
    Index action_dim() const { return actions_.rows(); }
    Index descriptor_dim() const { return observed_.rows(); }

    /// Inserts fully stamped transitions (both descriptors set) in order.
    void insert(std::span<const Transition> transitions) {
        for (const Transition& t : transitions) {
            require(t.observed_descriptor.size() == descriptor_dim() &&
                        t.target_descriptor.size() == descriptor_dim(),
                    "ReplayBuffer::insert: transition is not fully stamped");
            require(t.reward >= 0.0, "ReplayBuffer::insert: negative reward");
            const Index i = cursor_;
            states_.col(i) = t.state;
            actions_.col(i) = t.action;
            rewards_[i] = t.reward;
            next_states_.col(i) = t.next_state;
            done_[i] = t.done ? 1.0 : 0.0;
            observed_.col(i) = t.observed_descriptor;
            targets_.col(i) = t.target_descriptor;
            cursor_ = (cursor_ + 1) % capacity();
            if (size_ < capacity()) ++size_;
        }
    }

    /// Uniform sampling with replacement over the current contents.
    TransitionBatch sample_uniform(Index n, RngEngine& rng) const {
        if (size_ == 0) throw std::runtime_error("ReplayBuffer::sample_uniform: buffer is empty");
        std::uniform_int_distribution<Index> pick(0, size_ - 1);
        TransitionBatch batch;
        batch.states.resize(state_dim(), n);
        batch.actions.resize(action_dim(), n);
        batch.rewards.resize(n);
        batch.next_states.resize(state_dim(), n);
        batch.done.resize(n);
        batch.observed_descriptors.resize(descriptor_dim(), n);
        batch.target_descriptors.resize(descriptor_dim(), n);
        for (Index j = 0; j < n; ++j) {
            const Index i = pick(rng);
            batch.states.col(j) = states_.col(i);
            batch.actions.col(j) = actions_.col(i);
            batch.rewards[j] = rewards_[i];
            batch.next_states.col(j) = next_states_.col(i);
            batch.done[j] = done_[i];
            batch.observed_descriptors.col(j) = observed_.col(i);
            batch.target_descriptors.col(j) = targets_.col(i);
        }
        return batch;
    }

    /// Entry at ring position i (0 = oldest); test and inspection helper.
    Transition at(Index i) const {
        require(i >= 0 && i < size_, "ReplayBuffer::at: index out of range");
        const Index slot = (size_ < capacity()) ? i : (cursor_ + i) % capacity();
        return Transition{states_.col(slot), actions_.col(slot),    rewards_[slot],
                          next_states_.col(slot), done_[slot] != 0.0, observed_.col(slot),
                          targets_.col(slot)};
    }

  private:
    Mat states_;
    Mat actions_;
    Vec rewards_;
    Mat next_states_;
    Vec done_;
    Mat observed_;
    Mat targets_;
    Index cursor_ = 0;
    Index size_ = 0;
};

}  // namespace qdrl
