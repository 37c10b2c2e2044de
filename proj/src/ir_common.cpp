#include "beacons/ir.hpp"

#include <algorithm>
#include <functional>

namespace beacons::ir {

ExprPtr Expr::lit(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::IntLit;
  e->literal = v;
  return e;
}

ExprPtr Expr::var(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::VarRef;
  e->name = std::move(name);
  return e;
}

ExprPtr Expr::call(std::string callee, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::CallRef;
  e->name = std::move(callee);
  e->args = std::move(args);
  return e;
}

ExprPtr Expr::load(std::string array, std::vector<ExprPtr> indices) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::LoadRef;
  e->name = std::move(array);
  e->args = std::move(indices);
  return e;
}

ExprPtr Expr::bin(ExprKind op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = op;
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

ExprPtr Expr::compare(CmpOp op, ExprPtr lhs, ExprPtr rhs) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Cmp;
  e->cmp = op;
  e->args = {std::move(lhs), std::move(rhs)};
  return e;
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind || a->literal != b->literal || a->name != b->name ||
      a->cmp != b->cmp || a->args.size() != b->args.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

bool is_numeric_closed(const ExprPtr& e) {
  if (!e) return true;
  switch (e->kind) {
    case ExprKind::IntLit:
    case ExprKind::VarRef:
      return true;
    case ExprKind::CallRef:
    case ExprKind::LoadRef:
      return false;
    default:
      for (const auto& a : e->args)
        if (!is_numeric_closed(a)) return false;
      return true;
  }
}

void collect_vars(const ExprPtr& e, std::vector<std::string>& out) {
  if (!e) return;
  if (e->kind == ExprKind::VarRef) {
    out.push_back(e->name);
    return;
  }
  for (const auto& a : e->args) collect_vars(a, out);
}

void collect_calls(const ExprPtr& e, std::vector<const Expr*>& out) {
  if (!e) return;
  if (e->kind == ExprKind::CallRef) out.push_back(e.get());
  for (const auto& a : e->args) collect_calls(a, out);
}

void collect_loads(const ExprPtr& e, std::vector<const Expr*>& out) {
  if (!e) return;
  if (e->kind == ExprKind::LoadRef) out.push_back(e.get());
  for (const auto& a : e->args) collect_loads(a, out);
}

ExprPtr fold(const ExprPtr& e) {
  if (!e) return e;
  switch (e->kind) {
    case ExprKind::IntLit:
    case ExprKind::VarRef:
      return e;
    case ExprKind::CallRef:
    case ExprKind::LoadRef: {
      std::vector<ExprPtr> args;
      args.reserve(e->args.size());
      for (const auto& a : e->args) args.push_back(fold(a));
      return e->kind == ExprKind::CallRef ? Expr::call(e->name, std::move(args))
                                          : Expr::load(e->name, std::move(args));
    }
    case ExprKind::Cmp: {
      auto l = fold(e->args[0]), r = fold(e->args[1]);
      if (l->kind == ExprKind::IntLit && r->kind == ExprKind::IntLit) {
        Value a = l->literal, b = r->literal;
        bool v = false;
        switch (e->cmp) {
          case CmpOp::Eq: v = a == b; break;
          case CmpOp::Ne: v = a != b; break;
          case CmpOp::Lt: v = a < b; break;
          case CmpOp::Le: v = a <= b; break;
          case CmpOp::Gt: v = a > b; break;
          case CmpOp::Ge: v = a >= b; break;
        }
        return Expr::lit(v ? 1 : 0);
      }
      return Expr::compare(e->cmp, std::move(l), std::move(r));
    }
    default: {
      auto l = fold(e->args[0]), r = fold(e->args[1]);
      bool ll = l->kind == ExprKind::IntLit, rl = r->kind == ExprKind::IntLit;
      if (ll && rl) {
        Value a = l->literal, b = r->literal;
        switch (e->kind) {
          case ExprKind::Add: return Expr::lit(a + b);
          case ExprKind::Sub: return Expr::lit(a - b);
          case ExprKind::Mul: return Expr::lit(a * b);
          case ExprKind::Div: return b == 0 ? Expr::bin(ExprKind::Div, l, r) : Expr::lit(a / b);
          default: break;
        }
      }
      // Identity simplifications keep normalized bounds readable.
      if (e->kind == ExprKind::Add) {
        if (ll && l->literal == 0) return r;
        if (rl && r->literal == 0) return l;
      }
      if (e->kind == ExprKind::Sub && rl && r->literal == 0) return l;
      if (e->kind == ExprKind::Mul) {
        if (ll && l->literal == 1) return r;
        if (rl && r->literal == 1) return l;
        if ((ll && l->literal == 0) || (rl && r->literal == 0)) return Expr::lit(0);
      }
      if (e->kind == ExprKind::Div && rl && r->literal == 1) return l;
      return Expr::bin(e->kind, std::move(l), std::move(r));
    }
  }
}

ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& replacement) {
  if (!e) return e;
  std::function<ExprPtr(const ExprPtr&)> go = [&](const ExprPtr& n) -> ExprPtr {
    switch (n->kind) {
      case ExprKind::IntLit:
        return n;
      case ExprKind::VarRef:
        return n->name == name ? replacement : n;
      default: {
        std::vector<ExprPtr> args;
        args.reserve(n->args.size());
        for (const auto& a : n->args) args.push_back(go(a));
        auto out = std::make_shared<Expr>(*n);
        out->args = std::move(args);
        return out;
      }
    }
  };
  return fold(go(e));
}

ExprPtr negate(const ExprPtr& e) {
  if (e && e->kind == ExprKind::Cmp) {
    CmpOp flipped;
    switch (e->cmp) {
      case CmpOp::Eq: flipped = CmpOp::Ne; break;
      case CmpOp::Ne: flipped = CmpOp::Eq; break;
      case CmpOp::Lt: flipped = CmpOp::Ge; break;
      case CmpOp::Ge: flipped = CmpOp::Lt; break;
      case CmpOp::Le: flipped = CmpOp::Gt; break;
      case CmpOp::Gt: flipped = CmpOp::Le; break;
    }
    return Expr::compare(flipped, e->args[0], e->args[1]);
  }
  return Expr::compare(CmpOp::Eq, e, Expr::lit(0));
}

Stmt clone(const Stmt& s) {
  Stmt out = s;  // Exprs are immutable and shareable
  if (s.loop) {
    out.loop = std::make_shared<Loop>(*s.loop);
    out.loop->body.clear();
    for (const auto& c : s.loop->body) out.loop->body.push_back(clone(c));
  }
  out.then_body.clear();
  for (const auto& c : s.then_body) out.then_body.push_back(clone(c));
  return out;
}

Program clone(const Program& p) {
  Program out = p;
  for (auto& f : out.functions) {
    std::vector<Stmt> body;
    body.reserve(f.body.size());
    for (const auto& s : f.body) body.push_back(clone(s));
    f.body = std::move(body);
  }
  return out;
}

const Function* Program::find_function(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

const ArrayDecl* Program::find_array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

bool Program::is_extern(const std::string& name) const {
  return std::find(externs.begin(), externs.end(), name) != externs.end();
}

namespace {

bool stmt_equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case StmtKind::Assign:
      return a.var == b.var && equal(a.expr, b.expr);
    case StmtKind::MemAccess: {
      if (a.array != b.array || a.dir != b.dir || a.irregular != b.irregular ||
          a.indices.size() != b.indices.size() || !equal(a.expr, b.expr))
        return false;
      for (size_t i = 0; i < a.indices.size(); ++i)
        if (!equal(a.indices[i], b.indices[i])) return false;
      return true;
    }
    case StmtKind::Call: {
      if (a.callee != b.callee || a.args.size() != b.args.size()) return false;
      for (size_t i = 0; i < a.args.size(); ++i)
        if (!equal(a.args[i], b.args[i])) return false;
      return true;
    }
    case StmtKind::ExitBranch:
      return equal(a.cond, b.cond) && a.target_label == b.target_label;
    case StmtKind::Nop:
      return a.cost == b.cost;
    case StmtKind::If: {
      if (!equal(a.cond, b.cond) || a.then_body.size() != b.then_body.size()) return false;
      for (size_t i = 0; i < a.then_body.size(); ++i)
        if (!stmt_equal(a.then_body[i], b.then_body[i])) return false;
      return true;
    }
    case StmtKind::Loop: {
      const Loop& la = *a.loop;
      const Loop& lb = *b.loop;
      if (la.induction_var != lb.induction_var || la.label != lb.label ||
          la.from_while != lb.from_while || la.non_normalizable != lb.non_normalizable ||
          !equal(la.lower, lb.lower) || !equal(la.upper, lb.upper) ||
          !equal(la.step, lb.step) || la.body.size() != lb.body.size())
        return false;
      for (size_t i = 0; i < la.body.size(); ++i)
        if (!stmt_equal(la.body[i], lb.body[i])) return false;
      return true;
    }
  }
  return false;
}

}  // namespace

bool equal(const Program& a, const Program& b) {
  if (a.entry != b.entry || a.externs != b.externs ||
      a.arrays.size() != b.arrays.size() || a.functions.size() != b.functions.size())
    return false;
  for (size_t i = 0; i < a.arrays.size(); ++i) {
    const auto& x = a.arrays[i];
    const auto& y = b.arrays[i];
    if (x.name != y.name || x.elem_size != y.elem_size || x.extents.size() != y.extents.size())
      return false;
    for (size_t j = 0; j < x.extents.size(); ++j)
      if (!equal(x.extents[j], y.extents[j])) return false;
  }
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const auto& f = a.functions[i];
    const auto& g = b.functions[i];
    if (f.name != g.name || f.params != g.params || !equal(f.return_expr, g.return_expr) ||
        f.body.size() != g.body.size())
      return false;
    for (size_t j = 0; j < f.body.size(); ++j)
      if (!stmt_equal(f.body[j], g.body[j])) return false;
  }
  return true;
}

namespace {

void walk_levels(const Stmt& loop_stmt, int level, LoopNest& nest) {
  if (static_cast<int>(nest.levels.size()) < level) nest.levels.resize(level);
  nest.levels[level - 1].push_back(&loop_stmt);
  nest.depth = std::max(nest.depth, level);
  std::function<void(const std::vector<Stmt>&)> scan = [&](const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == StmtKind::Loop)
        walk_levels(s, level + 1, nest);
      else if (s.kind == StmtKind::If)
        scan(s.then_body);
    }
  };
  scan(loop_stmt.loop->body);
}

}  // namespace

std::vector<LoopNest> collect_nests(const Function& f) {
  std::vector<LoopNest> out;
  int k = 0;
  std::function<void(const std::vector<Stmt>&)> scan = [&](const std::vector<Stmt>& body) {
    for (const auto& s : body) {
      if (s.kind == StmtKind::Loop) {
        LoopNest nest;
        nest.function = f.name;
        nest.id = f.name + "#" + std::to_string(k++);
        nest.outer = &s;
        walk_levels(s, 1, nest);
        out.push_back(std::move(nest));
      } else if (s.kind == StmtKind::If) {
        scan(s.then_body);
      }
    }
  };
  scan(f.body);
  return out;
}

std::vector<LoopNest> collect_nests(const Program& p) {
  std::vector<LoopNest> out;
  for (const auto& f : p.functions) {
    auto nests = collect_nests(f);
    out.insert(out.end(), nests.begin(), nests.end());
  }
  return out;
}

std::vector<const Stmt*> collect_exits(const Stmt& loop_stmt) {
  std::vector<const Stmt*> out;
  // Labels of loops nested inside (a break targeting one of those stays inside).
  std::function<void(const std::vector<Stmt>&, std::vector<std::string>&)> scan =
      [&](const std::vector<Stmt>& body, std::vector<std::string>& inner_labels) {
        for (const auto& s : body) {
          if (s.kind == StmtKind::ExitBranch) {
            bool leaves = false;
            if (s.target_label.empty()) {
              leaves = inner_labels.empty();  // innermost is this loop itself
            } else {
              leaves = std::find(inner_labels.begin(), inner_labels.end(), s.target_label) ==
                           inner_labels.end();
            }
            // A labelled break to this very loop also leaves it.
            if (leaves) out.push_back(&s);
          } else if (s.kind == StmtKind::Loop) {
            inner_labels.push_back(s.loop->label);
            scan(s.loop->body, inner_labels);
            inner_labels.pop_back();
          } else if (s.kind == StmtKind::If) {
            scan(s.then_body, inner_labels);
          }
        }
      };
  std::vector<std::string> inner;
  scan(loop_stmt.loop->body, inner);
  return out;
}

}  // namespace beacons::ir
