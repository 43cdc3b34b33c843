#include "em/tree.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "em/rng.hpp"

namespace em {

const Segment& InterconnectTree::segment(int id) const {
  if (id < 0 || id >= static_cast<int>(segments.size()))
    fail(Errc::dangling_reference, "segment id " + std::to_string(id));
  return segments[id];
}

const Node& InterconnectTree::node(int id) const {
  if (id < 0 || id >= static_cast<int>(nodes.size()))
    fail(Errc::dangling_reference, "node id " + std::to_string(id));
  return nodes[id];
}

int InterconnectTree::n_terminals() const {
  int n = 0;
  for (const auto& nd : nodes) n += nd.is_terminal() ? 1 : 0;
  return n;
}

int InterconnectTree::n_junctions() const {
  int n = 0;
  for (const auto& nd : nodes) n += nd.degree() >= 2 ? 1 : 0;
  return n;
}

InterconnectTree build_tree(std::vector<Segment> segments, std::vector<Node> nodes) {
  const int n_seg = static_cast<int>(segments.size());
  const int n_node = static_cast<int>(nodes.size());
  if (n_seg == 0 || n_node == 0) fail(Errc::invalid_spec, "empty segment or node list");

  std::sort(segments.begin(), segments.end(),
            [](const Segment& a, const Segment& b) { return a.id < b.id; });
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
  for (int i = 0; i < n_seg; ++i)
    if (segments[i].id != i) fail(Errc::invalid_spec, "segment ids must be dense and unique");
  for (int i = 0; i < n_node; ++i)
    if (nodes[i].id != i) fail(Errc::invalid_spec, "node ids must be dense and unique");

  for (auto& nd : nodes) nd.incident.clear();
  for (const auto& s : segments) {
    if (s.node_prev < 0 || s.node_prev >= n_node || s.node_next < 0 || s.node_next >= n_node)
      fail(Errc::dangling_reference,
           "segment " + std::to_string(s.id) + " references a missing node");
    if (s.node_prev == s.node_next)
      fail(Errc::invalid_spec, "segment " + std::to_string(s.id) + " is a self loop");
    if (!(s.length > 0.0))
      fail(Errc::invalid_spec, "segment " + std::to_string(s.id) + " length must be > 0");
    if (!(s.width > 0.0))
      fail(Errc::invalid_spec, "segment " + std::to_string(s.id) + " width must be > 0");
    nodes[s.node_prev].incident.emplace_back(s.id, Side::prev);
    nodes[s.node_next].incident.emplace_back(s.id, Side::next);
  }

  for (const auto& nd : nodes) {
    if (nd.incident.empty())
      fail(Errc::disconnected_graph, "node " + std::to_string(nd.id) + " has no segments");
    if (nd.degree() > kMaxDegree)
      fail(Errc::degree_exceeded,
           "node " + std::to_string(nd.id) + " degree " + std::to_string(nd.degree()));
  }

  for (const auto& s : segments) {
    const Point2 a = nodes[s.node_prev].coord;
    const Point2 b = nodes[s.node_next].coord;
    const double dist = std::hypot(b.x - a.x, b.y - a.y);
    if (std::abs(dist - s.length) > 1e-9 * std::max(dist, s.length))
      fail(Errc::geometry_mismatch, "segment " + std::to_string(s.id) + " length " +
                                        std::to_string(s.length) + " vs node distance " +
                                        std::to_string(dist));
  }

  // Connectivity by BFS over nodes.
  std::vector<char> seen(n_node, 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  int reached = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (const auto& [sid, side] : nodes[v].incident) {
      const auto& s = segments[sid];
      const int other = (side == Side::prev) ? s.node_next : s.node_prev;
      if (!seen[other]) {
        seen[other] = 1;
        ++reached;
        queue.push_back(other);
      }
    }
  }
  if (reached != n_node) fail(Errc::disconnected_graph, std::to_string(n_node - reached) +
                                                             " node(s) unreachable from node 0");

  InterconnectTree tree;
  tree.segments = std::move(segments);
  tree.nodes = std::move(nodes);
  return tree;
}

TreeContexts node_contexts(const InterconnectTree& tree, const MaterialParams& material,
                           double T_ref) {
  TreeContexts out;
  out.nodes.resize(tree.nodes.size());
  out.segments.resize(tree.segments.size());
  const double kappa = diffusivity(T_ref, material);

  // Breadth-first traversal over nodes; context content is order-independent.
  std::vector<char> seen(tree.nodes.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    const Node& nd = tree.nodes[v];
    NodeContext& ctx = out.nodes[v];
    ctx.node_id = v;
    ctx.degree = nd.degree();
    ctx.coord = nd.coord;
    for (int m = 0; m < nd.degree(); ++m) {
      const auto& [sid, side] = nd.incident[m];
      const Segment& s = tree.segments[sid];
      ctx.adj_G[m] = em_driving_force(s.current_density, material);
      ctx.adj_w[m] = s.width;
      ctx.signs[m] = (side == Side::next) ? 1.0 : -1.0;
      ctx.adj_segment[m] = sid;
      const int far = (side == Side::next) ? s.node_prev : s.node_next;
      ctx.adj_coord[m] = tree.nodes[far].coord;
      if (!seen[far]) {
        seen[far] = 1;
        queue.push_back(far);
      }
    }
    if (nd.degree() >= 2) out.interior_junctions.push_back(v);
  }
  std::sort(out.interior_junctions.begin(), out.interior_junctions.end());

  for (const Segment& s : tree.segments) {
    SegmentContext& sc = out.segments[s.id];
    sc.segment_id = s.id;
    sc.L = s.length;
    sc.G = em_driving_force(s.current_density, material);
    sc.kappa = kappa;
    sc.width = s.width;
    sc.ctx_prev = out.nodes[s.node_prev];
    sc.ctx_next = out.nodes[s.node_next];
    const auto slot_of = [&](const Node& nd, Side side) {
      for (int m = 0; m < nd.degree(); ++m)
        if (nd.incident[m].first == s.id && nd.incident[m].second == side) return m;
      fail(Errc::dangling_reference, "segment " + std::to_string(s.id) + " missing from node " +
                                         std::to_string(nd.id) + " incidence");
    };
    sc.slot_prev = slot_of(tree.nodes[s.node_prev], Side::prev);
    sc.slot_next = slot_of(tree.nodes[s.node_next], Side::next);
  }
  return out;
}

double locate(const InterconnectTree& tree, int segment_id, double fraction) {
  const Segment& s = tree.segment(segment_id);
  if (!(fraction >= 0.0 && fraction <= 1.0))
    fail(Errc::out_of_range, "fraction " + std::to_string(fraction) + " outside [0, 1]");
  return fraction * s.length;
}

TreeContexts scale_problem(const TreeContexts& ctx, const ScalingFactors& f) {
  f.validate();
  TreeContexts out = ctx;
  for (auto& nc : out.nodes) {
    for (int m = 0; m < nc.degree; ++m) {
      nc.adj_G[m] = f.scale_gradient(nc.adj_G[m]);
      nc.adj_w[m] = nc.adj_w[m] / f.omega_x;
      nc.adj_coord[m] = {f.scale_x(nc.adj_coord[m].x), f.scale_x(nc.adj_coord[m].y)};
    }
    nc.coord = {f.scale_x(nc.coord.x), f.scale_x(nc.coord.y)};
  }
  for (auto& sc : out.segments) {
    sc.L = f.scale_x(sc.L);
    sc.G = f.scale_gradient(sc.G);
    sc.kappa = f.scale_kappa(sc.kappa);
    sc.width = sc.width / f.omega_x;
    sc.ctx_prev = out.nodes[sc.ctx_prev.node_id];
    sc.ctx_next = out.nodes[sc.ctx_next.node_id];
  }
  return out;
}

void RandomTreeSpec::validate() const {
  if (n_segments < 1) fail(Errc::invalid_spec, "n_segments must be >= 1");
  if (!(length_min > 0.0) || !(length_max >= length_min))
    fail(Errc::invalid_spec, "length range must satisfy 0 < min <= max");
  if (!(j_max >= j_min)) fail(Errc::invalid_spec, "current density range must satisfy min <= max");
  if (width_set.empty()) fail(Errc::invalid_spec, "width_set must not be empty");
  for (double w : width_set)
    if (!(w > 0.0)) fail(Errc::invalid_spec, "width_set entries must be > 0");
}

InterconnectTree generate_random_tree(const RandomTreeSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<Segment> segments;
  std::vector<Node> nodes;
  nodes.push_back({0, {0.0, 0.0}, {}});

  if (!spec.branching) {
    double x = 0.0;
    for (int i = 0; i < spec.n_segments; ++i) {
      const double L = rng.uniform(spec.length_min, spec.length_max);
      const double j = rng.uniform(spec.j_min, spec.j_max);
      const double w = spec.width_set[rng.index(spec.width_set.size())];
      x += L;
      nodes.push_back({i + 1, {x, 0.0}, {}});
      segments.push_back({i, i, i + 1, L, w, j, Orientation::horizontal});
    }
    return build_tree(std::move(segments), std::move(nodes));
  }

  // Branching mode: attach each new segment to a random node with spare
  // degree, growing on a jittered 2-D lattice so coordinates stay distinct.
  std::vector<int> open{0};
  std::vector<int> degree{0};
  for (int i = 0; i < spec.n_segments; ++i) {
    const int pick = static_cast<int>(rng.index(open.size()));
    const int base = open[pick];
    const double L = rng.uniform(spec.length_min, spec.length_max);
    const double j = rng.uniform(spec.j_min, spec.j_max);
    const double w = spec.width_set[rng.index(spec.width_set.size())];
    const int dir = static_cast<int>(rng.index(4));  // +x, -x, +y, -y
    const Point2 from = nodes[base].coord;
    Point2 to = from;
    Orientation ori = Orientation::horizontal;
    switch (dir) {
      case 0: to.x += L; break;
      case 1: to.x -= L; break;
      case 2: to.y += L; ori = Orientation::vertical; break;
      default: to.y -= L; ori = Orientation::vertical; break;
    }
    const int nid = static_cast<int>(nodes.size());
    nodes.push_back({nid, to, {}});
    // New segments leave the base node, so the base is the preceding end.
    segments.push_back({i, base, nid, L, w, j, ori});
    degree[base] += 1;
    degree.push_back(1);
    if (degree[base] >= kMaxDegree) open.erase(open.begin() + pick);
    open.push_back(nid);
  }
  return build_tree(std::move(segments), std::move(nodes));
}

}  // namespace em
