#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "em/physics.hpp"

namespace em {

enum class Orientation { horizontal, vertical };
enum class Side { prev, next };

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// One metal segment. Local coordinate runs from the preceding node (C-, x=0)
// to the subsequent node (C+, x=L).
struct Segment {
  int id = -1;
  int node_prev = -1;
  int node_next = -1;
  double length = 0.0;           // m
  double width = 0.0;            // m
  double current_density = 0.0;  // A/m^2, signed
  Orientation orientation = Orientation::horizontal;
};

struct Node {
  int id = -1;
  Point2 coord;  // m
  std::vector<std::pair<int, Side>> incident;  // (segment id, side at this node)

  int degree() const { return static_cast<int>(incident.size()); }
  bool is_terminal() const { return incident.size() == 1; }
};

struct InterconnectTree {
  std::vector<Segment> segments;  // dense, indexed by id
  std::vector<Node> nodes;        // dense, indexed by id

  const Segment& segment(int id) const;
  const Node& node(int id) const;
  int n_terminals() const;
  int n_junctions() const;  // nodes with degree >= 2
};

inline constexpr int kMaxDegree = 4;

// Per-node collection consumed by the initial-gradient rule and the
// flux-conserving transform. Entries follow the node's incidence order;
// indices >= degree are zero padding. signs[m] is +1 when this node is the
// segment's subsequent (C+) end and -1 when it is the preceding (C-) end.
struct NodeContext {
  int node_id = -1;
  int degree = 0;
  std::array<double, kMaxDegree> adj_G{};
  std::array<double, kMaxDegree> adj_w{};
  std::array<double, kMaxDegree> signs{};
  std::array<Point2, kMaxDegree> adj_coord{};  // far-end node of each incident segment
  std::array<int, kMaxDegree> adj_segment{-1, -1, -1, -1};
  Point2 coord;
};

struct SegmentContext {
  int segment_id = -1;
  double L = 0.0;
  double G = 0.0;
  double kappa = 0.0;
  double width = 0.0;
  NodeContext ctx_prev;  // at C-
  NodeContext ctx_next;  // at C+
  int slot_prev = -1;    // index of this segment in ctx_prev's incidence order
  int slot_next = -1;
};

struct TreeContexts {
  std::vector<NodeContext> nodes;
  std::vector<SegmentContext> segments;
  std::vector<int> interior_junctions;  // node ids with degree >= 2, ascending
};

// Validates connectivity, degree cap, id density and segment length vs node
// coordinates (1e-9 relative). Incidence lists are derived from the segment
// endpoints in segment-id order.
InterconnectTree build_tree(std::vector<Segment> segments, std::vector<Node> nodes);

// Builds per-node and per-segment collections by breadth-first traversal.
// kappa is evaluated at T_ref.
TreeContexts node_contexts(const InterconnectTree& tree, const MaterialParams& material,
                           double T_ref = 350.0);

// Segment-local coordinate of a fractional position; 0 -> C-, 1 -> C+.
double locate(const InterconnectTree& tree, int segment_id, double fraction);

// Maps every length-, gradient- and diffusivity-carrying entry of the
// contexts into scaled units.
TreeContexts scale_problem(const TreeContexts& ctx, const ScalingFactors& f);

struct RandomTreeSpec {
  int n_segments = 2;
  double length_min = 1e-5;  // m
  double length_max = 1e-4;  // m
  double j_min = -5e10;      // A/m^2
  double j_max = 5e10;       // A/m^2
  std::vector<double> width_set = {1e-7};
  std::uint64_t seed = 1;
  bool branching = false;  // straight chain when false

  void validate() const;
};

InterconnectTree generate_random_tree(const RandomTreeSpec& spec);

}  // namespace em
