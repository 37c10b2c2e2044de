#include <cctype>
#include <functional>
#include <set>

#include "beacons/affine.hpp"
#include "beacons/ir.hpp"

namespace beacons::ir {

namespace {

enum class Tok { Ident, Int, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Value value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }

  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        ++line_;
        col_ = 1;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++col_;
        ++pos_;
      } else {
        break;
      }
    }
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Tok::End;
      tok_.text = "<eof>";
      return;
    }
    char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t start = pos_;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) take1();
      tok_.kind = Tok::Int;
      tok_.text = src_.substr(start, pos_ - start);
      tok_.value = std::stoll(tok_.text);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
              src_[pos_] == '-')) {
        // Allow '-' only inside the keyword break-if.
        if (src_[pos_] == '-' && src_.compare(start, pos_ - start, "break") != 0) break;
        take1();
      }
      tok_.kind = Tok::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    // Multi-char punctuation first.
    static const char* two[] = {"..", "==", "!=", "<=", ">="};
    for (const char* p : two) {
      if (src_.compare(pos_, 2, p) == 0) {
        tok_.kind = Tok::Punct;
        tok_.text = p;
        take1();
        take1();
        return;
      }
    }
    tok_.kind = Tok::Punct;
    tok_.text = std::string(1, c);
    take1();
  }

  void take1() {
    ++pos_;
    ++col_;
  }

  const std::string& src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

[[noreturn]] void fail(const Token& t, const std::string& msg) {
  throw ParseError({t.line, t.col, msg + " (got '" + t.text + "')"});
}

[[noreturn]] void sema_fail(int line, const std::string& msg) {
  throw SemanticError({line, 0, msg});
}

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program parse() {
    Program p;
    while (lex_.peek().kind != Tok::End) {
      const Token& t = lex_.peek();
      if (t.kind != Tok::Ident) fail(t, "expected declaration");
      if (t.text == "entry") {
        lex_.take();
        p.entry = expect_ident("entry function name");
        expect(";");
      } else if (t.text == "extern") {
        lex_.take();
        p.externs.push_back(expect_ident("extern name"));
        expect(";");
      } else if (t.text == "array") {
        p.arrays.push_back(parse_array());
      } else if (t.text == "func") {
        p.functions.push_back(parse_function());
      } else {
        fail(t, "expected 'entry', 'extern', 'array' or 'func'");
      }
    }
    finish(p);
    return p;
  }

 private:
  Lexer lex_;
  int next_id_ = 0;
  int while_counter_ = 0;

  void expect(const std::string& punct) {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Punct || t.text != punct) fail(t, "expected '" + punct + "'");
    lex_.take();
  }

  bool accept(const std::string& punct) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Punct && t.text == punct) {
      lex_.take();
      return true;
    }
    return false;
  }

  bool accept_kw(const std::string& kw) {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Ident && t.text == kw) {
      lex_.take();
      return true;
    }
    return false;
  }

  std::string expect_ident(const std::string& what) {
    const Token& t = lex_.peek();
    if (t.kind != Tok::Ident) fail(t, "expected " + what);
    if (t.text.rfind("__", 0) == 0) fail(t, "identifiers starting with '__' are reserved");
    return lex_.take().text;
  }

  ArrayDecl parse_array() {
    lex_.take();  // array
    ArrayDecl a;
    a.name = expect_ident("array name");
    while (accept("[")) {
      const Token& t = lex_.peek();
      if (t.kind == Tok::Int)
        a.extents.push_back(Expr::lit(lex_.take().value));
      else
        a.extents.push_back(Expr::var(expect_ident("array extent")));
      expect("]");
    }
    if (a.extents.empty()) fail(lex_.peek(), "array needs at least one extent");
    if (accept_kw("elem")) {
      const Token& t = lex_.peek();
      if (t.kind != Tok::Int || t.value <= 0) fail(t, "expected positive element size");
      a.elem_size = lex_.take().value;
    }
    expect(";");
    return a;
  }

  Function parse_function() {
    lex_.take();  // func
    Function f;
    f.name = expect_ident("function name");
    expect("(");
    if (!accept(")")) {
      do {
        f.params.push_back(expect_ident("parameter name"));
      } while (accept(","));
      expect(")");
    }
    expect("{");
    while (!accept("}")) {
      if (accept_kw("return")) {
        f.return_expr = parse_expr();
        expect(";");
        const Token& t = lex_.peek();
        if (t.kind != Tok::Punct || t.text != "}")
          fail(t, "'return' must be the last statement of a function");
        continue;
      }
      f.body.push_back(parse_stmt());
    }
    return f;
  }

  std::vector<Stmt> parse_block() {
    expect("{");
    std::vector<Stmt> body;
    while (!accept("}")) body.push_back(parse_stmt());
    return body;
  }

  Stmt parse_stmt() {
    const Token t = lex_.peek();
    if (t.kind != Tok::Ident) fail(t, "expected statement");
    if (t.text == "for") return parse_for("");
    if (t.text == "while") return parse_while();
    if (t.text == "if") return parse_if();
    if (t.text == "load" || t.text == "store") return parse_mem(t.text == "store");
    if (t.text == "call") return parse_call();
    if (t.text == "break-if") return parse_break();
    if (t.text == "nop") return parse_nop();
    // Either `label: for ...` or `name = expr;`.
    Token name = lex_.take();
    if (accept(":")) {
      const Token& nxt = lex_.peek();
      if (nxt.kind != Tok::Ident || nxt.text != "for") fail(nxt, "expected 'for' after label");
      if (name.text.rfind("__", 0) == 0) fail(name, "reserved label");
      return parse_for(name.text);
    }
    expect("=");
    Stmt s = make_stmt(StmtKind::Assign, name.line);
    if (name.text.rfind("__", 0) == 0) fail(name, "reserved identifier");
    s.var = name.text;
    s.expr = parse_expr();
    expect(";");
    return s;
  }

  Stmt make_stmt(StmtKind k, int line) {
    Stmt s;
    s.id = next_id_++;
    s.kind = k;
    s.line = line;
    return s;
  }

  Stmt parse_for(const std::string& label) {
    int line = lex_.peek().line;
    lex_.take();  // for
    auto loop = std::make_shared<Loop>();
    loop->label = label;
    loop->induction_var = expect_ident("induction variable");
    if (!accept_kw("in")) fail(lex_.peek(), "expected 'in'");
    loop->lower = parse_expr();
    expect("..");
    loop->upper = parse_expr();
    loop->step = accept_kw("step") ? parse_expr() : Expr::lit(1);
    Stmt s = make_stmt(StmtKind::Loop, line);
    loop->body = parse_block();
    s.loop = std::move(loop);
    return s;
  }

  Stmt parse_while(){
    int line = lex_.peek().line;
    lex_.take();  // while
    ExprPtr cond = parse_expr();
    auto loop = std::make_shared<Loop>();
    loop->induction_var = "__w" + std::to_string(while_counter_++);
    loop->lower = Expr::lit(0);
    loop->upper = Expr::call(kUnboundedMarker, {});
    loop->step = Expr::lit(1);
    loop->from_while = true;
    Stmt guard = make_stmt(StmtKind::ExitBranch, line);
    guard.cond = negate(cond);
    loop->body.push_back(std::move(guard));
    auto body = parse_block();
    for (auto& b : body) loop->body.push_back(std::move(b));
    Stmt s = make_stmt(StmtKind::Loop, line);
    s.loop = std::move(loop);
    return s;
  }

  Stmt parse_if() {
    int line = lex_.peek().line;
    lex_.take();
    Stmt s = make_stmt(StmtKind::If, line);
    s.cond = parse_expr();
    s.then_body = parse_block();
    return s;
  }

  Stmt parse_mem(bool is_store) {
    int line = lex_.peek().line;
    lex_.take();
    Stmt s = make_stmt(StmtKind::MemAccess, line);
    s.dir = is_store ? AccessDir::Write : AccessDir::Read;
    s.array = expect_ident("array name");
    while (accept("[")) {
      s.indices.push_back(parse_expr());
      expect("]");
    }
    if (s.indices.empty()) fail(lex_.peek(), "memory access needs an index");
    if (is_store && accept("=")) s.expr = parse_expr();
    expect(";");
    return s;
  }

  Stmt parse_call() {
    int line = lex_.peek().line;
    lex_.take();
    Stmt s = make_stmt(StmtKind::Call, line);
    s.callee = expect_ident("callee");
    expect("(");
    if (!accept(")")) {
      do {
        s.args.push_back(parse_expr());
      } while (accept(","));
      expect(")");
    }
    expect(";");
    return s;
  }

  Stmt parse_break() {
    int line = lex_.peek().line;
    lex_.take();
    Stmt s = make_stmt(StmtKind::ExitBranch, line);
    s.cond = parse_expr();
    if (accept_kw("to")) s.target_label = expect_ident("loop label");
    expect(";");
    return s;
  }

  Stmt parse_nop() {
    int line = lex_.peek().line;
    lex_.take();
    const Token& t = lex_.peek();
    if (t.kind != Tok::Int) fail(t, "expected nop cost");
    Stmt s = make_stmt(StmtKind::Nop, line);
    s.cost = lex_.take().value;
    expect(";");
    return s;
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_sum();
    const Token& t = lex_.peek();
    if (t.kind == Tok::Punct) {
      CmpOp op;
      if (t.text == "==") op = CmpOp::Eq;
      else if (t.text == "!=") op = CmpOp::Ne;
      else if (t.text == "<=") op = CmpOp::Le;
      else if (t.text == ">=") op = CmpOp::Ge;
      else if (t.text == "<") op = CmpOp::Lt;
      else if (t.text == ">") op = CmpOp::Gt;
      else return lhs;
      lex_.take();
      return Expr::compare(op, std::move(lhs), parse_sum());
    }
    return lhs;
  }

  ExprPtr parse_sum() {
    ExprPtr e = parse_term();
    while (true) {
      if (accept("+"))
        e = Expr::bin(ExprKind::Add, std::move(e), parse_term());
      else if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "-" && !peek_is_range()) {
        lex_.take();
        e = Expr::bin(ExprKind::Sub, std::move(e), parse_term());
      } else {
        return e;
      }
    }
  }

  bool peek_is_range() { return false; }

  ExprPtr parse_term() {
    ExprPtr e = parse_factor();
    while (true) {
      if (accept("*"))
        e = Expr::bin(ExprKind::Mul, std::move(e), parse_factor());
      else if (accept("/"))
        e = Expr::bin(ExprKind::Div, std::move(e), parse_factor());
      else
        return e;
    }
  }

  ExprPtr parse_factor() {
    const Token& t = lex_.peek();
    if (t.kind == Tok::Int) return Expr::lit(lex_.take().value);
    if (t.kind == Tok::Punct && t.text == "-") {
      lex_.take();
      return Expr::bin(ExprKind::Sub, Expr::lit(0), parse_factor());
    }
    if (accept("(")) {
      ExprPtr e = parse_expr();
      expect(")");
      return e;
    }
    if (t.kind != Tok::Ident) fail(t, "expected expression");
    Token name = lex_.take();
    if (accept("(")) {
      std::vector<ExprPtr> args;
      if (!accept(")")) {
        do {
          args.push_back(parse_expr());
        } while (accept(","));
        expect(")");
      }
      return Expr::call(name.text, std::move(args));
    }
    if (lex_.peek().kind == Tok::Punct && lex_.peek().text == "[") {
      std::vector<ExprPtr> idx;
      while (accept("[")) {
        idx.push_back(parse_expr());
        expect("]");
      }
      return Expr::load(name.text, std::move(idx));
    }
    if (name.text.rfind("__", 0) == 0 && name.text != kUnboundedMarker)
      fail(name, "reserved identifier");
    return Expr::var(name.text);
  }

  // -- semantic analysis ----------------------------------------------------

  void finish(Program& p);
};

// Collects variable names assigned anywhere in a statement list (including
// nested loop/if bodies; induction variables excluded).
void collect_assigned(const std::vector<Stmt>& body, std::set<std::string>& out) {
  for (const auto& s : body) {
    if (s.kind == StmtKind::Assign) out.insert(s.var);
    if (s.kind == StmtKind::Loop) collect_assigned(s.loop->body, out);
    if (s.kind == StmtKind::If) collect_assigned(s.then_body, out);
  }
}

void Parser::finish(Program& p) {
  std::set<std::string> fn_names;
  for (const auto& f : p.functions) {
    if (!fn_names.insert(f.name).second) sema_fail(0, "duplicate function '" + f.name + "'");
  }
  std::set<std::string> arr_names;
  for (const auto& a : p.arrays) {
    if (!arr_names.insert(a.name).second) sema_fail(0, "duplicate array '" + a.name + "'");
  }
  for (const auto& e : p.externs) {
    if (fn_names.count(e)) sema_fail(0, "extern '" + e + "' collides with a function");
  }
  if (p.entry.empty()) {
    if (p.functions.empty()) sema_fail(0, "program has no functions");
    p.entry = fn_names.count("main") ? "main" : p.functions.front().name;
  } else if (!fn_names.count(p.entry)) {
    sema_fail(0, "entry function '" + p.entry + "' is not declared");
  }

  for (auto& f : p.functions) {
    for (const auto& prm : f.params) f.var_kinds[prm] = VarKind::Parameter;

    std::set<std::string> defined(f.params.begin(), f.params.end());
    std::vector<std::string> iv_stack;
    // Vars assigned inside each enclosing loop, for invariance checks.
    std::vector<std::set<std::string>> loop_assigned;
    int assign_count_guard = 0;
    (void)assign_count_guard;

    std::map<std::string, int> assign_counts;
    std::set<std::string> assigned_in_any_loop;

    std::function<void(const ExprPtr&, int)> check_expr = [&](const ExprPtr& e, int line) {
      if (!e) return;
      if (e->kind == ExprKind::VarRef) {
        if (!defined.count(e->name))
          sema_fail(line, "use of undefined variable '" + e->name + "' in " + f.name);
        return;
      }
      if (e->kind == ExprKind::CallRef) {
        if (e->name != kUnboundedMarker && !fn_names.count(e->name) &&
            !p.is_extern(e->name))
          sema_fail(line, "call target '" + e->name + "' does not resolve");
      }
      if (e->kind == ExprKind::LoadRef) {
        if (!arr_names.count(e->name)) sema_fail(line, "undeclared array '" + e->name + "'");
        const ArrayDecl* a = p.find_array(e->name);
        if (e->args.size() != a->extents.size())
          sema_fail(line, "array '" + e->name + "' expects " +
                              std::to_string(a->extents.size()) + " indices");
      }
      for (const auto& arg : e->args) check_expr(arg, line);
    };

    std::function<void(std::vector<Stmt>&)> walk = [&](std::vector<Stmt>& body) {
      for (auto& s : body) {
        switch (s.kind) {
          case StmtKind::Assign:
            check_expr(s.expr, s.line);
            if (std::find(iv_stack.begin(), iv_stack.end(), s.var) != iv_stack.end())
              sema_fail(s.line, "assignment to induction variable '" + s.var + "'");
            defined.insert(s.var);
            assign_counts[s.var]++;
            if (!loop_assigned.empty()) assigned_in_any_loop.insert(s.var);
            break;
          case StmtKind::MemAccess: {
            if (!arr_names.count(s.array)) sema_fail(s.line, "undeclared array '" + s.array + "'");
            const ArrayDecl* a = p.find_array(s.array);
            if (s.indices.size() != a->extents.size())
              sema_fail(s.line, "array '" + s.array + "' expects " +
                                    std::to_string(a->extents.size()) + " indices");
            for (const auto& ix : s.indices) check_expr(ix, s.line);
            if (s.expr) check_expr(s.expr, s.line);
            break;
          }
          case StmtKind::Call:
            if (!fn_names.count(s.callee) && !p.is_extern(s.callee))
              sema_fail(s.line, "call target '" + s.callee + "' does not resolve");
            for (const auto& a : s.args) check_expr(a, s.line);
            break;
          case StmtKind::ExitBranch:
            if (loop_assigned.empty()) sema_fail(s.line, "break-if outside of a loop");
            check_expr(s.cond, s.line);
            break;
          case StmtKind::Nop:
            if (s.cost < 0) sema_fail(s.line, "negative nop cost");
            break;
          case StmtKind::If:
            check_expr(s.cond, s.line);
            walk(s.then_body);
            break;
          case StmtKind::Loop: {
            Loop& l = *s.loop;
            check_expr(l.lower, s.line);
            check_expr(l.upper, s.line);
            check_expr(l.step, s.line);
            if (defined.count(l.induction_var))
              sema_fail(s.line, "induction variable '" + l.induction_var + "' shadows a definition");
            defined.insert(l.induction_var);
            f.var_kinds[l.induction_var] = VarKind::Induction;
            iv_stack.push_back(l.induction_var);
            loop_assigned.emplace_back();
            walk(l.body);
            loop_assigned.pop_back();
            iv_stack.pop_back();
            defined.erase(l.induction_var);
            break;
          }
        }
      }
    };
    walk(f.body);
    if (f.return_expr) check_expr(f.return_expr, 0);

    for (const auto& [name, count] : assign_counts) {
      if (f.var_kinds.count(name)) continue;  // params keep their kind
      f.var_kinds[name] = (count > 1 || assigned_in_any_loop.count(name))
                              ? VarKind::MutableLocal
                              : VarKind::LoopInvariant;
    }

    // Affinity of memory access indices: affine means every index expression
    // decomposes into literal-coefficient induction terms plus an offset
    // invariant within the enclosing nest.
    mark_irregular_accesses(p, f);
  }

  // Break targets must name enclosing loop labels.
  for (const auto& f : p.functions) {
    std::function<void(const std::vector<Stmt>&, std::vector<std::string>&)> walk =
        [&](const std::vector<Stmt>& body, std::vector<std::string>& labels) {
          for (const auto& s : body) {
            if (s.kind == StmtKind::ExitBranch && !s.target_label.empty()) {
              if (std::find(labels.begin(), labels.end(), s.target_label) == labels.end())
                sema_fail(s.line, "break target '" + s.target_label + "' is not an enclosing loop");
            } else if (s.kind == StmtKind::Loop) {
              labels.push_back(s.loop->label);
              walk(s.loop->body, labels);
              labels.pop_back();
            } else if (s.kind == StmtKind::If) {
              walk(s.then_body, labels);
            }
          }
        };
    std::vector<std::string> labels;
    walk(f.body, labels);
  }
}

}  // namespace

Program parse_program(const std::string& text) {
  Parser parser(text);
  return parser.parse();
}

}  // namespace beacons::ir
