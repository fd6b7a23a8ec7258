#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fcrbt {

enum class Color : std::uint8_t { Red, Black };

/// A tree node. Structural fields (links, color) are only written under
/// exclusive mutation. `value` and `deleted` may be touched by concurrent
/// soft operations and readers.
struct TreeNode {
  TreeNode(std::int64_t k, std::int64_t v) : key(k), value(v) {}

  const std::int64_t key;
  std::atomic<std::int64_t> value;
  Color color = Color::Red;
  TreeNode* left = nullptr;
  TreeNode* right = nullptr;
  TreeNode* parent = nullptr;
  std::atomic<bool> deleted{false};
};

/// Raised when a soft operation targets a key that has no physical node.
class ProtocolError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ViolationKind {
  RootNotBlack,
  RedRed,
  BlackHeight,
  BstOrder,
  ParentLink,
  CountMismatch,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::int64_t key = 0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
  std::string summary() const;
};

/// Sequential red-black tree keyed by int64 with soft-deletion marks.
///
/// insert/erase/compact need exclusive access. get, find and the soft
/// operations may run concurrently with each other as long as no
/// structural mutation is in flight.
class RBTree {
 public:
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  explicit RBTree(std::size_t max_nodes = kUnbounded);
  ~RBTree();

  RBTree(const RBTree&) = delete;
  RBTree& operator=(const RBTree&) = delete;

  /// Returns true iff a new physical node was created. An existing node
  /// (live or soft-deleted) gets its value replaced and its mark cleared.
  bool insert(std::int64_t key, std::int64_t value);

  /// Physically unlinks the node regardless of its mark.
  bool erase(std::int64_t key);

  std::optional<std::int64_t> get(std::int64_t key) const;

  /// Physical lookup; soft-deleted nodes are returned too.
  TreeNode* find(std::int64_t key) const;

  bool soft_erase(std::int64_t key);
  bool soft_insert(std::int64_t key, std::int64_t value);
  // Node-level forms used when the node was located earlier.
  bool soft_erase(TreeNode& node);
  bool soft_insert(TreeNode& node, std::int64_t value);

  /// Drops every soft-deleted node and rebuilds a balanced tree from the
  /// survivors. Returns the number of nodes removed.
  std::size_t compact();

  ValidationReport validate() const;

  std::size_t physical_count() const { return physical_count_; }
  std::size_t live_count() const { return live_count_.load(std::memory_order_acquire); }
  std::size_t max_nodes() const { return max_nodes_; }
  bool empty() const { return root_ == nullptr; }

  /// Black nodes on any root-to-nil path, root included. 0 for empty.
  std::size_t black_height() const;
  std::size_t height() const;

  std::vector<std::int64_t> live_keys() const;
  std::vector<std::pair<std::int64_t, std::int64_t>> live_entries() const;
  /// (key, parent key or key itself for the root) in key order.
  std::vector<std::pair<std::int64_t, std::int64_t>> shape() const;

  void clear();

 private:
  friend struct RBTreeInspector;

  void rotate_left(TreeNode* x);
  void rotate_right(TreeNode* x);
  void insert_fixup(TreeNode* z);
  void erase_fixup(TreeNode* x, TreeNode* parent);
  void transplant(TreeNode* u, TreeNode* v);
  void unlink(TreeNode* z);
  TreeNode* build_balanced(std::vector<TreeNode*>& nodes, std::size_t lo, std::size_t hi,
                           std::size_t depth, std::size_t red_depth, TreeNode* parent);

  TreeNode* root_ = nullptr;
  std::size_t physical_count_ = 0;
  std::atomic<std::size_t> live_count_{0};
  std::size_t max_nodes_;
};

}  // namespace fcrbt
