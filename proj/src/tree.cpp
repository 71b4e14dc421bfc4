#include "crtprune/tree.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "crtprune/errors.hpp"

namespace crtprune {

NodeId Tree::add_child(NodeId parent, double length, bool truncated) {
  auto id = static_cast<NodeId>(nodes_.size());
  Node n;
  n.parent = parent;
  n.length = length;
  n.truncated = truncated;
  nodes_.push_back(n);
  Node& p = nodes_[parent];
  if (p.last_child == kNoNode) {
    p.first_child = id;
  } else {
    nodes_[p.last_child].next_sibling = id;
  }
  p.last_child = id;
  ++p.child_count;
  return id;
}

std::vector<double> Tree::depths() const {
  std::vector<double> d(nodes_.size(), 0.0);
  for (std::size_t v = 1; v < nodes_.size(); ++v) d[v] = d[nodes_[v].parent] + nodes_[v].length;
  return d;
}

double Tree::height() const {
  auto d = depths();
  return *std::max_element(d.begin(), d.end());
}

double Tree::total_length() const {
  double s = 0.0;
  for (std::size_t v = 1; v < nodes_.size(); ++v) s += nodes_[v].length;
  return s;
}

std::size_t leaf_count(const Tree& t) {
  std::size_t n = 0;
  for (NodeId v = 1; v < t.size(); ++v) n += t.is_leaf(v) ? 1 : 0;
  return n;
}

std::size_t truncation_count(const Tree& t) {
  std::size_t n = 0;
  for (NodeId v = 1; v < t.size(); ++v) n += (t.degree(v) == 0 && t.truncated(v)) ? 1 : 0;
  return n;
}

std::vector<NodeId> leaves(const Tree& t) {
  std::vector<NodeId> out;
  for (NodeId v = 1; v < t.size(); ++v)
    if (t.is_leaf(v)) out.push_back(v);
  return out;
}

std::size_t leaves_at_level(const Tree& t, double a) {
  if (a == 0.0) return 1;
  auto d = t.depths();
  std::size_t n = 0;
  for (NodeId v = 1; v < t.size(); ++v)
    if (d[t.parent(v)] < a && a <= d[v]) ++n;
  return n;
}

Tree restrict_to(const Tree& t, double a) {
  auto d = t.depths();
  Tree out;
  out.set_leaf_mass(t.leaf_mass());
  out.reserve(t.size());
  std::vector<NodeId> map(t.size(), kNoNode);
  map[0] = 0;
  for (NodeId v = 1; v < t.size(); ++v) {
    NodeId p = t.parent(v);
    if (map[p] == kNoNode || d[p] >= a) continue;
    if (d[v] <= a) {
      map[v] = out.add_child(map[p], t.length(v), t.truncated(v));
    } else {
      out.add_child(map[p], a - d[p], true);
    }
  }
  // Branch points lying exactly at level a lose their children and become cut points.
  for (NodeId v = 1; v < t.size(); ++v)
    if (map[v] != kNoNode && t.degree(v) > 0 && out.degree(map[v]) == 0)
      out.set_truncated(map[v], true);
  return out;
}

namespace {

void copy_below(Tree& out, NodeId at, const Tree& src) {
  std::vector<NodeId> map(src.size(), kNoNode);
  map[0] = at;
  for (NodeId v = 1; v < src.size(); ++v) {
    NodeId p = map[src.parent(v)];
    map[v] = out.add_child(p, src.length(v), src.truncated(v));
  }
  if (src.degree(0) > 0) out.set_truncated(at, false);
}

}  // namespace

Tree graft(const Tree& t, const std::vector<std::pair<TreePoint, Tree>>& attachments) {
  // Per edge: grafts strictly inside the edge, sorted by offset; grafts at the node itself.
  std::vector<std::vector<std::pair<double, std::size_t>>> inner(t.size());
  std::vector<std::vector<std::size_t>> at_node(t.size());
  for (std::size_t i = 0; i < attachments.size(); ++i) {
    const TreePoint& p = attachments[i].first;
    if (p.node >= t.size()) throw PositionError("graft position names a missing node");
    double len = p.node == 0 ? 0.0 : t.length(p.node);
    if (!(p.offset >= 0.0) || p.offset > len)
      throw PositionError("graft offset outside the edge");
    if (p.offset == len) {
      at_node[p.node].push_back(i);
    } else if (p.offset == 0.0) {
      at_node[t.parent(p.node)].push_back(i);
    } else {
      inner[p.node].push_back({p.offset, i});
    }
  }
  Tree out;
  out.set_leaf_mass(t.leaf_mass());
  std::vector<NodeId> map(t.size(), kNoNode);
  map[0] = 0;
  auto attach_node_grafts = [&](NodeId old, NodeId now) {
    for (std::size_t i : at_node[old]) copy_below(out, now, attachments[i].second);
  };
  attach_node_grafts(0, 0);
  for (NodeId v = 1; v < t.size(); ++v) {
    NodeId cur = map[t.parent(v)];
    double done = 0.0;
    auto& list = inner[v];
    std::sort(list.begin(), list.end());
    for (std::size_t k = 0; k < list.size();) {
      double off = list[k].first;
      cur = out.add_child(cur, off - done);
      done = off;
      for (; k < list.size() && list[k].first == off; ++k)
        copy_below(out, cur, attachments[list[k].second].second);
    }
    map[v] = out.add_child(cur, t.length(v) - done, t.truncated(v));
    attach_node_grafts(v, map[v]);
  }
  return out;
}

Tree span(const Tree& t, const std::vector<NodeId>& marked, std::vector<NodeId>& new_id) {
  if (marked.empty()) throw EmptySpanError("span of an empty leaf set");
  std::vector<char> is_marked(t.size(), 0);
  for (NodeId v : marked) {
    if (v == 0 || v >= t.size() || t.degree(v) != 0)
      throw PositionError("span marks must be leaves");
    is_marked[v] = 1;
  }
  std::vector<char> keep(is_marked);
  std::vector<std::uint32_t> kept_children(t.size(), 0);
  for (NodeId v = static_cast<NodeId>(t.size()) - 1; v >= 1; --v) {
    if (keep[v]) {
      keep[t.parent(v)] = 1;
      ++kept_children[t.parent(v)];
    }
  }
  Tree out;
  out.set_leaf_mass(t.leaf_mass());
  new_id.assign(t.size(), kNoNode);
  new_id[0] = 0;
  std::vector<NodeId> anchor(t.size(), kNoNode);
  std::vector<double> acc(t.size(), 0.0);
  anchor[0] = 0;
  for (NodeId v = 1; v < t.size(); ++v) {
    if (!keep[v]) continue;
    NodeId p = t.parent(v);
    bool parent_passes = p != 0 && new_id[p] == kNoNode;
    anchor[v] = parent_passes ? anchor[p] : new_id[p];
    acc[v] = t.length(v) + (parent_passes ? acc[p] : 0.0);
    if (!is_marked[v] && kept_children[v] == 1) continue;
    new_id[v] = out.add_child(anchor[v], acc[v], t.truncated(v));
  }
  return out;
}

Tree span(const Tree& t, const std::vector<NodeId>& marked) {
  std::vector<NodeId> ids;
  return span(t, marked, ids);
}

namespace {

struct Canon {
  std::vector<double> below;  // height of the subtree hanging from each node
  std::vector<std::vector<NodeId>> order;
};

Canon canonical(const Tree& t) {
  Canon c;
  std::size_t n = t.size();
  c.below.assign(n, 0.0);
  std::vector<std::size_t> size(n, 1);
  for (NodeId v = static_cast<NodeId>(n) - 1; v >= 1; --v) {
    NodeId p = t.parent(v);
    c.below[p] = std::max(c.below[p], c.below[v] + t.length(v));
    size[p] += size[v];
  }
  c.order.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    for (NodeId ch : t.children(v)) c.order[v].push_back(ch);
    std::sort(c.order[v].begin(), c.order[v].end(), [&](NodeId x, NodeId y) {
      auto kx = std::make_tuple(c.below[x] + t.length(x), t.length(x), size[x], t.truncated(x));
      auto ky = std::make_tuple(c.below[y] + t.length(y), t.length(y), size[y], t.truncated(y));
      return kx < ky;
    });
  }
  return c;
}

}  // namespace

std::vector<std::vector<NodeId>> canonical_child_order(const Tree& t) {
  return canonical(t).order;
}

bool isometric(const Tree& a, const Tree& b, double tol) {
  if (a.size() != b.size()) return false;
  Canon ca = canonical(a);
  Canon cb = canonical(b);
  std::vector<std::pair<NodeId, NodeId>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [x, y] = stack.back();
    stack.pop_back();
    if (std::fabs(a.length(x) - b.length(y)) > tol) return false;
    if (a.degree(x) != b.degree(y)) return false;
    if (a.degree(x) == 0 && a.truncated(x) != b.truncated(y)) return false;
    for (std::size_t i = 0; i < ca.order[x].size(); ++i)
      stack.push_back({ca.order[x][i], cb.order[y][i]});
  }
  return true;
}

}  // namespace crtprune
