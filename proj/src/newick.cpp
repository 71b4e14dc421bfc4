#include "crtprune/newick.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

#include "crtprune/errors.hpp"

namespace crtprune {

namespace {

void append_length(std::string& s, double x) {
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  s.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

std::string serialize_tree(const Tree& t) {
  if (t.degree(0) == 0) return ";";
  auto order = canonical_child_order(t);
  std::string s;
  s.reserve(t.size() * 24);
  struct Frame {
    NodeId v;
    std::size_t next;
  };
  std::vector<Frame> stack{{0, 0}};
  s.push_back('(');
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < order[f.v].size()) {
      if (f.next > 0) s.push_back(',');
      NodeId c = order[f.v][f.next++];
      if (t.degree(c) == 0) {
        s.push_back(t.truncated(c) ? 'X' : 'L');
        s.push_back(':');
        append_length(s, t.length(c));
      } else {
        s.push_back('(');
        stack.push_back({c, 0});
      }
      continue;
    }
    NodeId v = f.v;
    stack.pop_back();
    s.push_back(')');
    if (v != 0) {
      s.append("I:");
      append_length(s, t.length(v));
    }
  }
  s.push_back(';');
  return s;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Tree run() {
    skip_space();
    if (peek() == ';') {
      ++pos_;
      finish();
      return Tree();
    }
    expect('(');
    Tree t;
    std::vector<NodeId> open{0};
    for (;;) {
      // A node starts here: either a subtree or a leaf.
      skip_space();
      if (peek() == '(') {
        ++pos_;
        open.push_back(t.add_child(open.back(), 0.0));
        continue;
      }
      std::size_t at = pos_;
      std::string label = read_label();
      if (!label.empty() && label != "L" && label != "X")
        throw ParseError(at, "leaf label must be L or X");
      expect(':');
      double len = read_length();
      t.add_child(open.back(), len, label == "X");
      // After a node: ',' continues the sibling list, ')' closes the parent.
      for (;;) {
        skip_space();
        char c = peek();
        if (c == ',') {
          ++pos_;
          break;
        }
        if (c != ')') throw ParseError(pos_, "expected ',' or ')'");
        ++pos_;
        NodeId closing = open.back();
        open.pop_back();
        std::size_t lat = pos_;
        std::string ilabel = read_label();
        if (!ilabel.empty() && ilabel != "I") throw ParseError(lat, "internal label must be I");
        if (closing == 0) {
          skip_space();
          expect(';');
          finish();
          return t;
        }
        expect(':');
        t.set_length(closing, read_length());
      }
    }
  }

 private:
  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size() &&
           (text_[pos_] == ' ' || text_[pos_] == '\n' || text_[pos_] == '\t' || text_[pos_] == '\r'))
      ++pos_;
  }

  void expect(char c) {
    if (peek() != c || pos_ >= text_.size())
      throw ParseError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string read_label() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           ((text_[pos_] >= 'A' && text_[pos_] <= 'Z') || (text_[pos_] >= 'a' && text_[pos_] <= 'z')))
      ++pos_;
    return std::string(text_.substr(start, pos_ - start));
  }

  double read_length() {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), x);
    if (ec != std::errc() || ptr == text_.data() + pos_) throw ParseError(pos_, "expected a number");
    if (!(x >= 0.0)) throw ParseError(pos_, "edge length must be non-negative");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return x;
  }

  void finish() {
    skip_space();
    if (pos_ != text_.size()) throw ParseError(pos_, "trailing characters");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Tree parse_tree(std::string_view text) { return Parser(text).run(); }

}  // namespace crtprune
