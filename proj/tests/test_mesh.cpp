#include <gtest/gtest.h>

#include "wsmc/mesh.hpp"

using wsmc::Direction;
using wsmc::MeshExchange;
using wsmc::PeContext;
using wsmc::Topology;

namespace {

struct Msg {
  std::size_t from;
  int seq;
};

}  // namespace

TEST(Mesh, DeliversToEachNeighbour) {
  MeshExchange<Msg> mesh(3, 4);
  mesh.superstep(
      [](PeContext<Msg>& ctx) {
        for (Direction d : wsmc::kAllDirections)
          if (ctx.has_neighbor(d)) ctx.send(d, {ctx.index(), 0});
      },
      Topology{});
  EXPECT_EQ(mesh.supersteps(), 1u);
  // Interior PE (1,1) hears from all four sides; corner (0,0) from two.
  const std::size_t mid = 1 * 4 + 1;
  EXPECT_EQ(mesh.inbox(mid, Direction::up).at(0).from, mid + 4);
  EXPECT_EQ(mesh.inbox(mid, Direction::down).at(0).from, mid - 4);
  EXPECT_EQ(mesh.inbox(mid, Direction::left).at(0).from, mid - 1);
  EXPECT_EQ(mesh.inbox(mid, Direction::right).at(0).from, mid + 1);
  EXPECT_TRUE(mesh.inbox(0, Direction::down).empty());
  EXPECT_TRUE(mesh.inbox(0, Direction::left).empty());
  // 3x4 mesh: 2*(3*3 + 2*4) directed links.
  EXPECT_EQ(mesh.messages_delivered(), 34u);
}

TEST(Mesh, FifoPerLinkAndInboxesClearEachStep) {
  MeshExchange<Msg> mesh(1, 2);
  mesh.superstep(
      [](PeContext<Msg>& ctx) {
        if (ctx.col() == 0)
          for (int k = 0; k < 5; ++k) ctx.send(Direction::right, {0, k});
      },
      Topology{});
  const auto& in = mesh.inbox(1, Direction::left);
  ASSERT_EQ(in.size(), 5u);
  for (int k = 0; k < 5; ++k) EXPECT_EQ(in[k].seq, k);
  mesh.superstep([](PeContext<Msg>&) {}, Topology{});
  EXPECT_TRUE(mesh.inbox(1, Direction::left).empty());
}

TEST(Mesh, WraparoundOnlyWhenRequested) {
  MeshExchange<Msg> mesh(2, 3);
  auto send_right = [](PeContext<Msg>& ctx) { ctx.send(Direction::right, {ctx.index(), 0}); };
  try {
    mesh.superstep(send_right, Topology{});
    FAIL() << "expected a protocol error";
  } catch (const wsmc::Error& e) {
    EXPECT_EQ(e.kind(), wsmc::ErrorKind::protocol);
    EXPECT_NE(std::string(e.what()).find("(0,2)"), std::string::npos);
  }
  mesh.superstep(send_right, Topology{true, false});
  EXPECT_EQ(mesh.inbox(0, Direction::left).at(0).from, 2u);
  EXPECT_EQ(mesh.inbox(3, Direction::left).at(0).from, 5u);

  MeshExchange<Msg> col(3, 1);
  col.superstep([](PeContext<Msg>& ctx) { ctx.send(Direction::up, {ctx.index(), 0}); }, Topology{false, true});
  EXPECT_EQ(col.inbox(0, Direction::down).at(0).from, 2u);
}

TEST(Mesh, LocalPassCannotSend) {
  MeshExchange<Msg> mesh(1, 2);
  mesh.superstep([](PeContext<Msg>& ctx) { if (ctx.col() == 0) ctx.send(Direction::right, {0, 7}); }, Topology{});
  int seen = -1;
  mesh.local_pass([&](PeContext<Msg>& ctx) {
    if (ctx.col() == 1) seen = ctx.inbox(Direction::left).at(0).seq;
  });
  EXPECT_EQ(seen, 7);
  EXPECT_TRUE(mesh.inbox(1, Direction::left).empty());
  try {
    mesh.local_pass([](PeContext<Msg>& ctx) { ctx.send(Direction::right, {0, 0}); });
    FAIL() << "expected a protocol error";
  } catch (const wsmc::Error& e) {
    EXPECT_EQ(e.kind(), wsmc::ErrorKind::protocol);
  }
}

TEST(Mesh, ResultIndependentOfThreadCount) {
  auto run = [](std::size_t threads) {
    MeshExchange<Msg> mesh(5, 7);
    std::vector<long> acc(mesh.size(), 0);
    for (int step = 0; step < 6; ++step) {
      mesh.superstep(
          [&](PeContext<Msg>& ctx) {
            for (Direction d : wsmc::kAllDirections)
              for (const auto& m : ctx.inbox(d)) acc[ctx.index()] = acc[ctx.index()] * 31 + static_cast<long>(m.from) + m.seq;
            ctx.send(Direction::right, {ctx.index(), step});
            if (ctx.has_neighbor(Direction::up)) ctx.send(Direction::up, {ctx.index(), -step});
          },
          Topology{true, false}, threads);
    }
    return acc;
  };
  EXPECT_EQ(run(1), run(8));
}

TEST(Mesh, ParallelForRethrowsLowestFailure) {
  try {
    wsmc::parallel_for(100, 4, [](std::size_t i) {
      if (i == 30 || i == 80) throw wsmc::Error(wsmc::ErrorKind::protocol, std::to_string(i));
    });
    FAIL() << "expected an error";
  } catch (const wsmc::Error& e) {
    EXPECT_NE(std::string(e.what()).find("30"), std::string::npos);
  }
}

TEST(Mesh, EmptyMeshRejected) {
  EXPECT_THROW(MeshExchange<Msg>(0, 3), wsmc::Error);
}
