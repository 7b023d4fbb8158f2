#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "wsmc/kernel.hpp"

namespace wsmc {

/// Structure-of-arrays particle list held by one PE or carried by one message.
/// Order is significant: diffusion ships the tail, lookups walk front to back.
class ParticleBuffer {
 public:
  ParticleBuffer() = default;
  explicit ParticleBuffer(std::size_t n_channels) : channels_(n_channels) {}

  std::size_t size() const noexcept { return energy_.size(); }
  bool empty() const noexcept { return energy_.empty(); }
  std::size_t n_channels() const noexcept { return channels_; }

  float energy(std::size_t i) const noexcept { return energy_[i]; }
  std::uint64_t id(std::size_t i) const noexcept { return id_[i]; }
  // Number of row columns whose nuclides this particle has accumulated.
  std::uint32_t visits(std::size_t i) const noexcept { return visits_[i]; }
  void add_visit(std::size_t i) noexcept { ++visits_[i]; }

  std::span<float> xs(std::size_t i) noexcept { return {xs_.data() + i * channels_, channels_}; }
  std::span<const float> xs(std::size_t i) const noexcept { return {xs_.data() + i * channels_, channels_}; }

  void push_back(float e, std::uint64_t id) {
    energy_.push_back(e);
    id_.push_back(id);
    visits_.push_back(0);
    xs_.insert(xs_.end(), channels_, 0.0f);
  }

  /// Copies particle i of `other` onto the end of this buffer.
  void push_from(const ParticleBuffer& other, std::size_t i) {
    energy_.push_back(other.energy_[i]);
    id_.push_back(other.id_[i]);
    visits_.push_back(other.visits_[i]);
    const auto src = other.xs(i);
    xs_.insert(xs_.end(), src.begin(), src.end());
  }

  void append(const ParticleBuffer& other) {
    if (empty()) {
      *this = other;
      return;
    }
    energy_.insert(energy_.end(), other.energy_.begin(), other.energy_.end());
    id_.insert(id_.end(), other.id_.begin(), other.id_.end());
    visits_.insert(visits_.end(), other.visits_.begin(), other.visits_.end());
    xs_.insert(xs_.end(), other.xs_.begin(), other.xs_.end());
  }

  void append(ParticleBuffer&& other) {
    if (empty()) {
      const auto channels = channels_;
      *this = std::move(other);
      if (size() == 0) channels_ = channels;
      return;
    }
    append(static_cast<const ParticleBuffer&>(other));
  }

  /// Removes the last `count` particles and returns them in their original order.
  ParticleBuffer split_tail(std::size_t count) {
    ParticleBuffer tail(channels_);
    const std::size_t keep = size() - count;
    tail.energy_.assign(energy_.begin() + static_cast<std::ptrdiff_t>(keep), energy_.end());
    tail.id_.assign(id_.begin() + static_cast<std::ptrdiff_t>(keep), id_.end());
    tail.visits_.assign(visits_.begin() + static_cast<std::ptrdiff_t>(keep), visits_.end());
    tail.xs_.assign(xs_.begin() + static_cast<std::ptrdiff_t>(keep * channels_), xs_.end());
    energy_.resize(keep);
    id_.resize(keep);
    visits_.resize(keep);
    xs_.resize(keep * channels_);
    return tail;
  }

  void clear() noexcept {
    energy_.clear();
    id_.clear();
    visits_.clear();
    xs_.clear();
  }

  Particle particle(std::size_t i) const {
    const auto x = xs(i);
    return {energy_[i], {x.begin(), x.end()}, id_[i]};
  }

 private:
  std::vector<float> energy_;
  std::vector<std::uint64_t> id_;
  std::vector<std::uint32_t> visits_;
  std::vector<float> xs_;
  std::size_t channels_ = 0;
};

}  // namespace wsmc
