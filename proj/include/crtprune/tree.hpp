#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace crtprune {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = std::numeric_limits<NodeId>::max();

struct Node {
  NodeId parent = kNoNode;
  NodeId first_child = kNoNode;
  NodeId last_child = kNoNode;
  NodeId next_sibling = kNoNode;
  std::uint32_t child_count = 0;
  bool truncated = false;
  double length = 0.0;
};

// Rooted tree with edge lengths. Node 0 is the root and every node is stored
// after its parent, so a forward scan visits parents before children.
class Tree {
 public:
  class ChildIterator {
   public:
    ChildIterator(const std::vector<Node>* nodes, NodeId id) : nodes_(nodes), id_(id) {}
    NodeId operator*() const { return id_; }
    ChildIterator& operator++() {
      id_ = (*nodes_)[id_].next_sibling;
      return *this;
    }
    bool operator!=(const ChildIterator& o) const { return id_ != o.id_; }
    bool operator==(const ChildIterator& o) const { return id_ == o.id_; }

   private:
    const std::vector<Node>* nodes_;
    NodeId id_;
  };
  struct ChildRange {
    ChildIterator b, e;
    ChildIterator begin() const { return b; }
    ChildIterator end() const { return e; }
  };

  Tree() : nodes_(1) {}

  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId v) const { return nodes_[v]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  ChildRange children(NodeId v) const {
    return {ChildIterator(&nodes_, nodes_[v].first_child), ChildIterator(&nodes_, kNoNode)};
  }
  double length(NodeId v) const { return nodes_[v].length; }
  NodeId parent(NodeId v) const { return nodes_[v].parent; }
  std::uint32_t degree(NodeId v) const { return nodes_[v].child_count; }
  bool truncated(NodeId v) const { return nodes_[v].truncated; }
  // A mass-carrying leaf: non-root, childless, not a truncation point.
  bool is_leaf(NodeId v) const {
    return v != 0 && nodes_[v].child_count == 0 && !nodes_[v].truncated;
  }

  double leaf_mass() const { return leaf_mass_; }
  void set_leaf_mass(double m) { leaf_mass_ = m; }

  void reserve(std::size_t n) { nodes_.reserve(n); }
  NodeId add_child(NodeId parent, double length, bool truncated = false);
  void set_length(NodeId v, double length) { nodes_[v].length = length; }
  void set_truncated(NodeId v, bool flag) { nodes_[v].truncated = flag; }

  std::vector<double> depths() const;
  double height() const;
  double total_length() const;

 private:
  std::vector<Node> nodes_;
  double leaf_mass_ = 0.0;
};

// A point on the edge into `node`, at distance `offset` from the parent end
// (offset == length is the node itself; the root is {0, 0}).
struct TreePoint {
  NodeId node = 0;
  double offset = 0.0;
};

std::size_t leaf_count(const Tree& t);
std::size_t truncation_count(const Tree& t);
std::vector<NodeId> leaves(const Tree& t);
std::size_t leaves_at_level(const Tree& t, double a);
Tree restrict_to(const Tree& t, double a);
Tree graft(const Tree& t, const std::vector<std::pair<TreePoint, Tree>>& attachments);
// Minimal subtree holding the root and the given leaves, unary nodes contracted.
Tree span(const Tree& t, const std::vector<NodeId>& marked);
// As above, also reporting the new id of every surviving old node (kNoNode otherwise).
Tree span(const Tree& t, const std::vector<NodeId>& marked, std::vector<NodeId>& new_id);
// Children of every node ordered by (subtree height, edge length, size, flag).
std::vector<std::vector<NodeId>> canonical_child_order(const Tree& t);
// Isometry test between rooted trees (leaf kinds included), up to tol on lengths.
bool isometric(const Tree& a, const Tree& b, double tol = 1e-9);

}  // namespace crtprune
