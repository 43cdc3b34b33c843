#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <set>

#include "doctest.h"
#include "em/tree.hpp"
#include "test_trees.hpp"

using namespace em;

TEST_CASE("cross-shaped tree: center degree 4, four terminals") {
  const InterconnectTree tree = make_cross();
  CHECK(tree.segments.size() == 4);
  CHECK(tree.nodes.size() == 5);
  CHECK(tree.node(0).degree() == 4);
  CHECK(tree.n_terminals() == 4);
  CHECK(tree.n_junctions() == 1);
}

TEST_CASE("cross-shaped tree: center signs follow the C+/C- rule") {
  const InterconnectTree tree = make_cross();
  const TreeContexts ctx = node_contexts(tree, MaterialParams{});
  const NodeContext& center = ctx.nodes[0];
  CHECK(center.degree == 4);
  CHECK(center.signs[0] == 1.0);   // west segment ends at the center
  CHECK(center.signs[1] == -1.0);  // east segment starts at the center
  CHECK(center.signs[2] == 1.0);
  CHECK(center.signs[3] == -1.0);
}

TEST_CASE("two collinear segments: one interior node of degree 2") {
  const InterconnectTree tree = make_chain({2e-5, 3e-5}, {4e9, -1e10});
  CHECK(tree.nodes[1].degree() == 2);
  CHECK(tree.n_terminals() == 2);
  const TreeContexts ctx = node_contexts(tree, MaterialParams{});
  CHECK(ctx.interior_junctions == std::vector<int>{1});
  CHECK(ctx.nodes[1].signs[0] == 1.0);
  CHECK(ctx.nodes[1].signs[1] == -1.0);
}

TEST_CASE("three-way junction signs from the side rule") {
  // left segment enters the junction (next side), right leaves (prev side),
  // below enters (next side).
  std::vector<Node> nodes{{0, {0.0, 0.0}, {}},
                          {1, {-1e-5, 0.0}, {}},
                          {2, {2e-5, 0.0}, {}},
                          {3, {0.0, -1.5e-5}, {}}};
  std::vector<Segment> segs{{0, 1, 0, 1e-5, 1e-7, 1e9, Orientation::horizontal},
                            {1, 0, 2, 2e-5, 1e-7, 1e9, Orientation::horizontal},
                            {2, 3, 0, 1.5e-5, 1e-7, 1e9, Orientation::vertical}};
  const InterconnectTree tree = build_tree(segs, nodes);
  const TreeContexts ctx = node_contexts(tree, MaterialParams{});
  const NodeContext& j = ctx.nodes[0];
  CHECK(j.degree == 3);
  CHECK(j.signs[0] == 1.0);
  CHECK(j.signs[1] == -1.0);
  CHECK(j.signs[2] == 1.0);
}

TEST_CASE("disconnected graphs are rejected") {
  std::vector<Node> nodes{{0, {0.0, 0.0}, {}},
                          {1, {1e-5, 0.0}, {}},
                          {2, {5e-5, 0.0}, {}},
                          {3, {6e-5, 0.0}, {}}};
  std::vector<Segment> segs{{0, 0, 1, 1e-5, 1e-7, 1e9, Orientation::horizontal},
                            {1, 2, 3, 1e-5, 1e-7, 1e9, Orientation::horizontal}};
  CHECK_THROWS_WITH_AS(build_tree(segs, nodes), doctest::Contains("DisconnectedGraph"), Error);
}

TEST_CASE("junction degree above four is rejected") {
  std::vector<Node> nodes;
  std::vector<Segment> segs;
  nodes.push_back({0, {0.0, 0.0}, {}});
  for (int i = 0; i < 5; ++i) {
    const double ang = 2.0 * M_PI * i / 5.0;
    nodes.push_back({i + 1, {std::cos(ang) * 1e-5, std::sin(ang) * 1e-5}, {}});
    segs.push_back({i, 0, i + 1, 1e-5, 1e-7, 1e9, Orientation::horizontal});
  }
  CHECK_THROWS_WITH_AS(build_tree(segs, nodes), doctest::Contains("DegreeExceeded"), Error);
}

TEST_CASE("length inconsistent with coordinates is rejected") {
  std::vector<Node> nodes{{0, {0.0, 0.0}, {}}, {1, {1e-5, 0.0}, {}}};
  std::vector<Segment> segs{{0, 0, 1, 2e-5, 1e-7, 1e9, Orientation::horizontal}};
  CHECK_THROWS_WITH_AS(build_tree(segs, nodes), doctest::Contains("GeometryMismatch"), Error);
}

TEST_CASE("segment referencing a missing node is rejected") {
  std::vector<Node> nodes{{0, {0.0, 0.0}, {}}, {1, {1e-5, 0.0}, {}}};
  std::vector<Segment> segs{{0, 0, 7, 1e-5, 1e-7, 1e9, Orientation::horizontal}};
  CHECK_THROWS_WITH_AS(build_tree(segs, nodes), doctest::Contains("DanglingReference"), Error);
}

TEST_CASE("locate maps fractions linearly onto the segment") {
  const InterconnectTree tree = make_chain({2e-5}, {1e9});
  CHECK(locate(tree, 0, 0.0) == 0.0);
  CHECK(locate(tree, 0, 1.0) == doctest::Approx(2e-5).epsilon(1e-15));
  CHECK(locate(tree, 0, 0.5) == doctest::Approx(1e-5).epsilon(1e-15));
  CHECK_THROWS_AS(locate(tree, 0, 1.5), Error);
  CHECK_THROWS_AS(locate(tree, 5, 0.5), Error);
}

TEST_CASE("locate endpoints land on the node coordinates") {
  const InterconnectTree tree = make_cross();
  for (const Segment& s : tree.segments) {
    const Point2 a = tree.node(s.node_prev).coord;
    const Point2 b = tree.node(s.node_next).coord;
    const double d = std::hypot(b.x - a.x, b.y - a.y);
    CHECK(locate(tree, s.id, 0.0) == doctest::Approx(0.0));
    CHECK(locate(tree, s.id, 1.0) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("node_contexts is a pure function of its inputs") {
  const InterconnectTree tree = make_cross();
  const MaterialParams m;
  const TreeContexts a = node_contexts(tree, m);
  const TreeContexts b = node_contexts(tree, m);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    for (int k = 0; k < kMaxDegree; ++k) {
      CHECK(a.nodes[i].adj_G[k] == b.nodes[i].adj_G[k]);
      CHECK(a.nodes[i].adj_w[k] == b.nodes[i].adj_w[k]);
      CHECK(a.nodes[i].signs[k] == b.nodes[i].signs[k]);
    }
  }
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].L == b.segments[i].L);
    CHECK(a.segments[i].G == b.segments[i].G);
    CHECK(a.segments[i].kappa == b.segments[i].kappa);
  }
}

TEST_CASE("alternating-side junctions have sign sums of zero") {
  for (const auto& tree : {make_cross(), make_chain({1e-5, 2e-5, 1e-5, 1e-5},
                                                    {4e9, -1e9, -4e9, -1e9})}) {
    const TreeContexts ctx = node_contexts(tree, MaterialParams{});
    for (int nid : ctx.interior_junctions) {
      const NodeContext& n = ctx.nodes[nid];
      if (n.degree % 2 != 0) continue;
      double sum = 0.0;
      for (int m = 0; m < n.degree; ++m) sum += n.signs[m];
      CHECK(sum == 0.0);
    }
  }
}

TEST_CASE("random chain generation is reproducible and in range") {
  RandomTreeSpec spec;
  spec.n_segments = 2;
  spec.length_min = 1e-5;
  spec.length_max = 1e-4;
  spec.seed = 42;
  const InterconnectTree a = generate_random_tree(spec);
  const InterconnectTree b = generate_random_tree(spec);
  REQUIRE(a.segments.size() == 2);
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].length == b.segments[i].length);
    CHECK(a.segments[i].current_density == b.segments[i].current_density);
    CHECK(a.segments[i].length >= spec.length_min);
    CHECK(a.segments[i].length <= spec.length_max);
  }
}

TEST_CASE("single-segment spec yields one blocked wire") {
  RandomTreeSpec spec;
  spec.n_segments = 1;
  const InterconnectTree t = generate_random_tree(spec);
  CHECK(t.segments.size() == 1);
  CHECK(t.n_terminals() == 2);
  CHECK(t.n_junctions() == 0);
}

TEST_CASE("different seeds draw different lengths") {
  RandomTreeSpec spec;
  spec.n_segments = 2;
  int distinct = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    spec.seed = s;
    const InterconnectTree a = generate_random_tree(spec);
    spec.seed = s + 1000;
    const InterconnectTree b = generate_random_tree(spec);
    if (a.segments[0].length != b.segments[0].length) ++distinct;
  }
  CHECK(distinct >= 99);
}

TEST_CASE("branching mode respects the degree cap") {
  RandomTreeSpec spec;
  spec.n_segments = 40;
  spec.branching = true;
  spec.seed = 7;
  const InterconnectTree t = generate_random_tree(spec);
  CHECK(t.segments.size() == 40);
  int max_deg = 0;
  for (const auto& n : t.nodes) max_deg = std::max(max_deg, n.degree());
  CHECK(max_deg <= 4);
  CHECK(max_deg >= 3);  // 40 segments on a lattice must branch somewhere
}

TEST_CASE("invalid random specs are rejected") {
  RandomTreeSpec spec;
  spec.n_segments = 0;
  CHECK_THROWS_WITH_AS(generate_random_tree(spec), doctest::Contains("InvalidSpec"), Error);
}

TEST_CASE("scale_problem rescales lengths, gradients and diffusivity consistently") {
  const InterconnectTree tree = make_chain({2e-5, 3e-5}, {4e9, -1e10});
  const TreeContexts ctx = node_contexts(tree, MaterialParams{});
  ScalingFactors f;
  const TreeContexts scaled = scale_problem(ctx, f);
  CHECK(scaled.segments[0].L == doctest::Approx(2.0));
  CHECK(scaled.segments[1].L == doctest::Approx(3.0));
  CHECK(scaled.segments[0].G == doctest::Approx(f.scale_gradient(ctx.segments[0].G)));
  CHECK(scaled.segments[0].kappa == doctest::Approx(f.scale_kappa(ctx.segments[0].kappa)));
  // Width ratios drive the junction rules and must be preserved.
  CHECK(scaled.nodes[1].adj_w[0] / scaled.nodes[1].adj_w[1] ==
        doctest::Approx(ctx.nodes[1].adj_w[0] / ctx.nodes[1].adj_w[1]));
  // Node contexts embedded in segments stay in sync with the node table.
  CHECK(scaled.segments[0].ctx_next.adj_G[0] == scaled.nodes[1].adj_G[0]);
}
