#pragma once

// Bulk-synchronous neighbor exchange on a 2D mesh of processing elements.
//
// In a superstep every PE runs the step function against its own inbox and
// outbox; messages produced in superstep k are delivered only after all PEs
// finish, so results do not depend on evaluation order or worker count.

#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "wsmc/error.hpp"

namespace wsmc {

// Row 0 is the bottom (lowest energy band); `up` moves to row + 1.
enum class Direction : std::uint8_t { up = 0, down = 1, left = 2, right = 3 };

inline constexpr std::array<Direction, 4> kAllDirections{Direction::up, Direction::down, Direction::left,
                                                         Direction::right};

constexpr Direction opposite(Direction d) noexcept {
  switch (d) {
    case Direction::up: return Direction::down;
    case Direction::down: return Direction::up;
    case Direction::left: return Direction::right;
    case Direction::right: return Direction::left;
  }
  return d;
}

inline std::string_view to_string(Direction d) noexcept {
  switch (d) {
    case Direction::up: return "up";
    case Direction::down: return "down";
    case Direction::left: return "left";
    case Direction::right: return "right";
  }
  return "?";
}

struct Topology {
  bool wrap_rows = false;     // left/right links close into a ring
  bool wrap_columns = false;  // up/down links close into a ring
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Rethrows the
/// exception of the lowest failing index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads > n) threads = n;
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        const std::size_t begin = n * t / threads;
        const std::size_t end = n * (t + 1) / threads;
        try {
          for (std::size_t i = begin; i < end; ++i) fn(i);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <class Message>
class MeshExchange;

template <class Message>
class PeContext {
 public:
  std::size_t index() const noexcept { return pe_; }
  std::size_t row() const noexcept { return pe_ / mesh_->cols(); }
  std::size_t col() const noexcept { return pe_ % mesh_->cols(); }

  /// Messages delivered from the neighbor on side `from`, FIFO per link.
  std::vector<Message>& inbox(Direction from) noexcept { return mesh_->inbox_[pe_][static_cast<int>(from)]; }

  void send(Direction to, Message m) {
    if (!may_send_)
      throw Error(ErrorKind::protocol, "PE " + mesh_->describe(pe_) + " sent a message outside a superstep");
    mesh_->outbox_[pe_][static_cast<int>(to)].push_back(std::move(m));
  }

  bool has_neighbor(Direction to) const noexcept { return mesh_->neighbor(pe_, to, topology_).has_value; }

 private:
  friend class MeshExchange<Message>;
  PeContext(MeshExchange<Message>* mesh, std::size_t pe, Topology topo, bool may_send)
      : mesh_(mesh), pe_(pe), topology_(topo), may_send_(may_send) {}

  MeshExchange<Message>* mesh_;
  std::size_t pe_;
  Topology topology_;
  bool may_send_;
};

template <class Message>
class MeshExchange {
 public:
  MeshExchange() = default;
  MeshExchange(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), inbox_(rows * cols), outbox_(rows * cols) {
    if (rows == 0 || cols == 0) throw Error(ErrorKind::invalid_configuration, "mesh needs at least one PE");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return rows_ * cols_; }
  std::size_t supersteps() const noexcept { return supersteps_; }
  std::size_t messages_delivered() const noexcept { return delivered_; }

  /// fn(PeContext<Message>&) is called once per PE.
  template <class Fn>
  void superstep(Fn&& fn, Topology topo, std::size_t threads = 1) {
    parallel_for(size(), threads, [&](std::size_t pe) {
      PeContext<Message> ctx(this, pe, topo, true);
      fn(ctx);
    });
    for (auto& box : inbox_)
      for (auto& q : box) q.clear();
    deliver(topo);
    ++supersteps_;
  }

  /// Lets every PE drain its inbox without sending; inboxes are cleared after.
  template <class Fn>
  void local_pass(Fn&& fn, std::size_t threads = 1) {
    parallel_for(size(), threads, [&](std::size_t pe) {
      PeContext<Message> ctx(this, pe, Topology{}, false);
      fn(ctx);
    });
    for (auto& box : inbox_)
      for (auto& q : box) q.clear();
  }

  const std::vector<Message>& inbox(std::size_t pe, Direction from) const noexcept {
    return inbox_[pe][static_cast<int>(from)];
  }

  std::string describe(std::size_t pe) const {
    return "(" + std::to_string(pe / cols_) + "," + std::to_string(pe % cols_) + ")";
  }

 private:
  friend class PeContext<Message>;

  struct Neighbor {
    bool has_value = false;
    std::size_t pe = 0;
  };

  Neighbor neighbor(std::size_t pe, Direction d, Topology topo) const noexcept {
    const std::size_t r = pe / cols_;
    const std::size_t c = pe % cols_;
    switch (d) {
      case Direction::up:
        if (r + 1 < rows_) return {true, pe + cols_};
        return topo.wrap_columns ? Neighbor{true, c} : Neighbor{};
      case Direction::down:
        if (r > 0) return {true, pe - cols_};
        return topo.wrap_columns ? Neighbor{true, (rows_ - 1) * cols_ + c} : Neighbor{};
      case Direction::right:
        if (c + 1 < cols_) return {true, pe + 1};
        return topo.wrap_rows ? Neighbor{true, r * cols_} : Neighbor{};
      case Direction::left:
        if (c > 0) return {true, pe - 1};
        return topo.wrap_rows ? Neighbor{true, r * cols_ + cols_ - 1} : Neighbor{};
    }
    return {};
  }

  void deliver(Topology topo) {
    // Validate first so a protocol error leaves no partial delivery behind.
    for (std::size_t pe = 0; pe < size(); ++pe) {
      for (Direction d : kAllDirections) {
        if (!outbox_[pe][static_cast<int>(d)].empty() && !neighbor(pe, d, topo).has_value) {
          for (auto& box : outbox_)
            for (auto& q : box) q.clear();
          throw Error(ErrorKind::protocol,
                      "PE " + describe(pe) + " sent " + std::string(to_string(d)) + " past the mesh edge");
        }
      }
    }
    for (std::size_t pe = 0; pe < size(); ++pe) {
      for (Direction d : kAllDirections) {
        auto& out = outbox_[pe][static_cast<int>(d)];
        if (out.empty()) continue;
        auto& in = inbox_[neighbor(pe, d, topo).pe][static_cast<int>(opposite(d))];
        delivered_ += out.size();
        for (auto& m : out) in.push_back(std::move(m));
        out.clear();
      }
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::array<std::vector<Message>, 4>> inbox_;
  std::vector<std::array<std::vector<Message>, 4>> outbox_;
  std::size_t supersteps_ = 0;
  std::size_t delivered_ = 0;
};

}  // namespace wsmc
