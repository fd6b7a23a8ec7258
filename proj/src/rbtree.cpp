#include "fcrbt/rbtree.hpp"

#include <bit>
#include <sstream>

namespace fcrbt {

namespace {

bool is_red(const TreeNode* n) { return n != nullptr && n->color == Color::Red; }
bool is_black(const TreeNode* n) { return n == nullptr || n->color == Color::Black; }

TreeNode* minimum(TreeNode* n) {
  while (n->left != nullptr) n = n->left;
  return n;
}

template <typename Fn>
void in_order(TreeNode* n, Fn&& fn) {
  // Iterative so degenerate hand-built trees in tests can't blow the stack.
  std::vector<TreeNode*> stack;
  while (n != nullptr || !stack.empty()) {
    while (n != nullptr) {
      stack.push_back(n);
      n = n->left;
    }
    n = stack.back();
    stack.pop_back();
    TreeNode* right = n->right;
    fn(n);
    n = right;
  }
}

}  // namespace

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::RootNotBlack: return "root-not-black";
    case ViolationKind::RedRed: return "red-red";
    case ViolationKind::BlackHeight: return "black-height";
    case ViolationKind::BstOrder: return "bst-order";
    case ViolationKind::ParentLink: return "parent-link";
    case ViolationKind::CountMismatch: return "count-mismatch";
  }
  return "unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  for (const auto& v : violations)
    if (v.kind == kind) return true;
  return false;
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream out;
  for (const auto& v : violations) out << to_string(v.kind) << "@" << v.key << ": " << v.detail << "; ";
  return out.str();
}

RBTree::RBTree(std::size_t max_nodes) : max_nodes_(max_nodes) {
  if (max_nodes == 0) throw std::invalid_argument("max_nodes must be positive");
}

RBTree::~RBTree() { clear(); }

void RBTree::clear() {
  std::vector<TreeNode*> all;
  all.reserve(physical_count_);
  in_order(root_, [&](TreeNode* n) { all.push_back(n); });
  for (TreeNode* n : all) delete n;
  root_ = nullptr;
  physical_count_ = 0;
  live_count_.store(0, std::memory_order_release);
}

TreeNode* RBTree::find(std::int64_t key) const {
  TreeNode* n = root_;
  while (n != nullptr) {
    if (key < n->key)
      n = n->left;
    else if (n->key < key)
      n = n->right;
    else
      return n;
  }
  return nullptr;
}

std::optional<std::int64_t> RBTree::get(std::int64_t key) const {
  const TreeNode* n = find(key);
  if (n == nullptr || n->deleted.load(std::memory_order_acquire)) return std::nullopt;
  return n->value.load(std::memory_order_acquire);
}

void RBTree::rotate_left(TreeNode* x) {
  TreeNode* y = x->right;
  x->right = y->left;
  if (y->left != nullptr) y->left->parent = x;
  y->parent = x->parent;
  if (x->parent == nullptr)
    root_ = y;
  else if (x == x->parent->left)
    x->parent->left = y;
  else
    x->parent->right = y;
  y->left = x;
  x->parent = y;
}

void RBTree::rotate_right(TreeNode* x) {
  TreeNode* y = x->left;
  x->left = y->right;
  if (y->right != nullptr) y->right->parent = x;
  y->parent = x->parent;
  if (x->parent == nullptr)
    root_ = y;
  else if (x == x->parent->right)
    x->parent->right = y;
  else
    x->parent->left = y;
  y->right = x;
  x->parent = y;
}

bool RBTree::insert(std::int64_t key, std::int64_t value) {
  TreeNode* parent = nullptr;
  TreeNode* cur = root_;
  while (cur != nullptr) {
    parent = cur;
    if (key < cur->key) {
      cur = cur->left;
    } else if (cur->key < key) {
      cur = cur->right;
    } else {
      cur->value.store(value, std::memory_order_release);
      if (cur->deleted.exchange(false, std::memory_order_acq_rel))
        live_count_.fetch_add(1, std::memory_order_acq_rel);
      return false;
    }
  }

  auto* z = new TreeNode(key, value);
  z->parent = parent;
  if (parent == nullptr)
    root_ = z;
  else if (key < parent->key)
    parent->left = z;
  else
    parent->right = z;
  ++physical_count_;
  live_count_.fetch_add(1, std::memory_order_acq_rel);
  insert_fixup(z);
  return true;
}

void RBTree::insert_fixup(TreeNode* z) {
  while (is_red(z->parent)) {
    TreeNode* p = z->parent;
    TreeNode* g = p->parent;
    if (p == g->left) {
      TreeNode* uncle = g->right;
      if (is_red(uncle)) {
        p->color = Color::Black;
        uncle->color = Color::Black;
        g->color = Color::Red;
        z = g;
      } else {
        if (z == p->right) {
          z = p;
          rotate_left(z);
          p = z->parent;
        }
        p->color = Color::Black;
        g->color = Color::Red;
        rotate_right(g);
      }
    } else {
      TreeNode* uncle = g->left;
      if (is_red(uncle)) {
        p->color = Color::Black;
        uncle->color = Color::Black;
        g->color = Color::Red;
        z = g;
      } else {
        if (z == p->left) {
          z = p;
          rotate_right(z);
          p = z->parent;
        }
        p->color = Color::Black;
        g->color = Color::Red;
        rotate_left(g);
      }
    }
  }
  root_->color = Color::Black;
}

void RBTree::transplant(TreeNode* u, TreeNode* v) {
  if (u->parent == nullptr)
    root_ = v;
  else if (u == u->parent->left)
    u->parent->left = v;
  else
    u->parent->right = v;
  if (v != nullptr) v->parent = u->parent;
}

bool RBTree::erase(std::int64_t key) {
  TreeNode* z = find(key);
  if (z == nullptr) return false;
  unlink(z);
  if (!z->deleted.load(std::memory_order_acquire)) live_count_.fetch_sub(1, std::memory_order_acq_rel);
  --physical_count_;
  delete z;
  return true;
}

// Successor-splice deletion; nodes are relinked rather than copied so a
// node's identity (and its mark) never moves to another key.
void RBTree::unlink(TreeNode* z) {
  TreeNode* y = z;
  Color removed_color = y->color;
  TreeNode* x = nullptr;
  TreeNode* x_parent = nullptr;

  if (z->left == nullptr) {
    x = z->right;
    x_parent = z->parent;
    transplant(z, z->right);
  } else if (z->right == nullptr) {
    x = z->left;
    x_parent = z->parent;
    transplant(z, z->left);
  } else {
    y = minimum(z->right);
    removed_color = y->color;
    x = y->right;
    if (y->parent == z) {
      x_parent = y;
    } else {
      x_parent = y->parent;
      transplant(y, y->right);
      y->right = z->right;
      y->right->parent = y;
    }
    transplant(z, y);
    y->left = z->left;
    y->left->parent = y;
    y->color = z->color;
  }

  if (removed_color == Color::Black) erase_fixup(x, x_parent);
}

void RBTree::erase_fixup(TreeNode* x, TreeNode* parent) {
  while (x != root_ && is_black(x)) {
    if (x == parent->left) {
      TreeNode* w = parent->right;
      if (is_red(w)) {
        w->color = Color::Black;
        parent->color = Color::Red;
        rotate_left(parent);
        w = parent->right;
      }
      if (is_black(w->left) && is_black(w->right)) {
        w->color = Color::Red;
        x = parent;
        parent = x->parent;
      } else {
        if (is_black(w->right)) {
          w->left->color = Color::Black;
          w->color = Color::Red;
          rotate_right(w);
          w = parent->right;
        }
        w->color = parent->color;
        parent->color = Color::Black;
        w->right->color = Color::Black;
        rotate_left(parent);
        x = root_;
        parent = nullptr;
      }
    } else {
      TreeNode* w = parent->left;
      if (is_red(w)) {
        w->color = Color::Black;
        parent->color = Color::Red;
        rotate_right(parent);
        w = parent->left;
      }
      if (is_black(w->left) && is_black(w->right)) {
        w->color = Color::Red;
        x = parent;
        parent = x->parent;
      } else {
        if (is_black(w->left)) {
          w->right->color = Color::Black;
          w->color = Color::Red;
          rotate_left(w);
          w = parent->left;
        }
        w->color = parent->color;
        parent->color = Color::Black;
        w->left->color = Color::Black;
        rotate_right(parent);
        x = root_;
        parent = nullptr;
      }
    }
  }
  if (x != nullptr) x->color = Color::Black;
}

bool RBTree::soft_erase(TreeNode& node) {
  if (node.deleted.exchange(true, std::memory_order_acq_rel)) return false;
  live_count_.fetch_sub(1, std::memory_order_acq_rel);
  return true;
}

bool RBTree::soft_insert(TreeNode& node, std::int64_t value) {
  // The value must be visible before the mark flips.
  node.value.store(value, std::memory_order_release);
  if (!node.deleted.exchange(false, std::memory_order_acq_rel)) return false;
  live_count_.fetch_add(1, std::memory_order_acq_rel);
  return true;
}

bool RBTree::soft_erase(std::int64_t key) {
  TreeNode* n = find(key);
  if (n == nullptr) throw ProtocolError("soft erase of key without a physical node: " + std::to_string(key));
  return soft_erase(*n);
}

bool RBTree::soft_insert(std::int64_t key, std::int64_t value) {
  TreeNode* n = find(key);
  if (n == nullptr) throw ProtocolError("soft insert of key without a physical node: " + std::to_string(key));
  return soft_insert(*n, value);
}

std::size_t RBTree::compact() {
  std::vector<TreeNode*> live;
  std::vector<TreeNode*> dead;
  live.reserve(physical_count_);
  in_order(root_, [&](TreeNode* n) {
    (n->deleted.load(std::memory_order_acquire) ? dead : live).push_back(n);
  });
  if (dead.empty()) return 0;
  for (TreeNode* n : dead) delete n;

  // Levels [0, full) are complete in a size-balanced build; nodes on the
  // partial level below them are colored red so black heights agree.
  const std::size_t full = std::bit_width(live.size() + 1) - 1;
  root_ = build_balanced(live, 0, live.size(), 0, full, nullptr);
  if (root_ != nullptr) root_->color = Color::Black;
  physical_count_ = live.size();
  return dead.size();
}

TreeNode* RBTree::build_balanced(std::vector<TreeNode*>& nodes, std::size_t lo, std::size_t hi,
                                 std::size_t depth, std::size_t red_depth, TreeNode* parent) {
  if (lo >= hi) return nullptr;
  const std::size_t mid = lo + (hi - lo) / 2;
  TreeNode* n = nodes[mid];
  n->parent = parent;
  n->color = depth == red_depth ? Color::Red : Color::Black;
  n->left = build_balanced(nodes, lo, mid, depth + 1, red_depth, n);
  n->right = build_balanced(nodes, mid + 1, hi, depth + 1, red_depth, n);
  return n;
}

ValidationReport RBTree::validate() const {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::int64_t key, std::string detail) {
    report.violations.push_back({kind, key, std::move(detail)});
  };

  if (root_ != nullptr && root_->color != Color::Black) add(ViolationKind::RootNotBlack, root_->key, "root is red");
  if (root_ != nullptr && root_->parent != nullptr) add(ViolationKind::ParentLink, root_->key, "root has a parent");

  struct Frame {
    const TreeNode* node;
    std::optional<std::int64_t> lo, hi;
    std::size_t blacks;
  };
  std::optional<std::size_t> path_blacks;
  std::size_t reachable = 0;
  std::size_t live = 0;
  std::vector<Frame> stack;
  if (root_ != nullptr) stack.push_back({root_, std::nullopt, std::nullopt, 0});

  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    const TreeNode* n = f.node;
    ++reachable;
    if (!n->deleted.load(std::memory_order_acquire)) ++live;
    if ((f.lo && n->key <= *f.lo) || (f.hi && n->key >= *f.hi))
      add(ViolationKind::BstOrder, n->key, "key outside ancestor bounds");
    if (n->color == Color::Red && (is_red(n->left) || is_red(n->right)))
      add(ViolationKind::RedRed, n->key, "red node with red child");
    const std::size_t blacks = f.blacks + (n->color == Color::Black ? 1 : 0);
    for (const TreeNode* child : {n->left, n->right}) {
      if (child == nullptr) {
        if (!path_blacks)
          path_blacks = blacks;
        else if (*path_blacks != blacks)
          add(ViolationKind::BlackHeight, n->key,
              "path with " + std::to_string(blacks) + " black nodes, expected " + std::to_string(*path_blacks));
        continue;
      }
      if (child->parent != n) add(ViolationKind::ParentLink, child->key, "parent pointer mismatch");
    }
    if (n->left != nullptr) stack.push_back({n->left, f.lo, n->key, blacks});
    if (n->right != nullptr) stack.push_back({n->right, n->key, f.hi, blacks});
  }

  if (reachable != physical_count_)
    add(ViolationKind::CountMismatch, 0,
        "physical count " + std::to_string(physical_count_) + " but " + std::to_string(reachable) + " reachable");
  if (live != live_count())
    add(ViolationKind::CountMismatch, 0,
        "live count " + std::to_string(live_count()) + " but " + std::to_string(live) + " live nodes");
  return report;
}

std::size_t RBTree::black_height() const {
  std::size_t h = 0;
  for (const TreeNode* n = root_; n != nullptr; n = n->left)
    if (n->color == Color::Black) ++h;
  return h;
}

std::size_t RBTree::height() const {
  struct Frame {
    const TreeNode* node;
    std::size_t depth;
  };
  std::size_t best = 0;
  std::vector<Frame> stack;
  if (root_ != nullptr) stack.push_back({root_, 1});
  while (!stack.empty()) {
    auto [n, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (n->left) stack.push_back({n->left, d + 1});
    if (n->right) stack.push_back({n->right, d + 1});
  }
  return best;
}

std::vector<std::int64_t> RBTree::live_keys() const {
  std::vector<std::int64_t> keys;
  in_order(root_, [&](TreeNode* n) {
    if (!n->deleted.load(std::memory_order_acquire)) keys.push_back(n->key);
  });
  return keys;
}

std::vector<std::pair<std::int64_t, std::int64_t>> RBTree::live_entries() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  in_order(root_, [&](TreeNode* n) {
    if (!n->deleted.load(std::memory_order_acquire)) out.emplace_back(n->key, n->value.load());
  });
  return out;
}

std::vector<std::pair<std::int64_t, std::int64_t>> RBTree::shape() const {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  in_order(root_, [&](TreeNode* n) { out.emplace_back(n->key, n->parent ? n->parent->key : n->key); });
  return out;
}

}  // namespace fcrbt
