#pragma once

// Textual mini loop-IR (.bir): expression/statement/program types, the
// parser and pretty printer, loop normalization, and the profiling
// interpreter. See docs/grammar.md for the surface syntax.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "beacons/util.hpp"

namespace beacons::ir {

using Value = std::int64_t;

// Name of the reserved intrinsic used as the upper bound of desugared
// `while` loops. Never user-declarable.
inline constexpr const char* kUnboundedMarker = "__unbounded";

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class ExprKind { IntLit, VarRef, CallRef, LoadRef, Add, Sub, Mul, Div, Cmp };
enum class CmpOp { Eq, Ne, Lt, Le, Gt, Ge };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree. Shared subtrees are fine; nothing mutates an
// Expr after construction.
struct Expr {
  ExprKind kind = ExprKind::IntLit;
  Value literal = 0;           // IntLit
  std::string name;            // VarRef / CallRef (callee) / LoadRef (array)
  CmpOp cmp = CmpOp::Eq;       // Cmp
  std::vector<ExprPtr> args;   // call args, load indices, binary operands

  static ExprPtr lit(Value v);
  static ExprPtr var(std::string name);
  static ExprPtr call(std::string callee, std::vector<ExprPtr> args);
  static ExprPtr load(std::string array, std::vector<ExprPtr> indices);
  static ExprPtr bin(ExprKind op, ExprPtr lhs, ExprPtr rhs);
  static ExprPtr compare(CmpOp op, ExprPtr lhs, ExprPtr rhs);
};

bool equal(const ExprPtr& a, const ExprPtr& b);

// True iff all leaves are integer literals or scalar variable references
// (no call refs, no load refs).
bool is_numeric_closed(const ExprPtr& e);

// Scalar variable names referenced anywhere in the tree, depth-first,
// duplicates preserved.
void collect_vars(const ExprPtr& e, std::vector<std::string>& out);

// (callee, args) pairs for every call leaf; (array, indices) for every load.
void collect_calls(const ExprPtr& e, std::vector<const Expr*>& out);
void collect_loads(const ExprPtr& e, std::vector<const Expr*>& out);

std::string to_string(const ExprPtr& e);

// Substitute every reference to `name` with `replacement`, folding literal
// arithmetic where possible.
ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& replacement);
ExprPtr fold(const ExprPtr& e);

// Negate a boolean-valued expression: comparisons flip their operator,
// anything else `x` becomes `x == 0`.
ExprPtr negate(const ExprPtr& e);

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

enum class StmtKind { Assign, MemAccess, Call, ExitBranch, Nop, Loop, If };
enum class AccessDir { Read, Write };

struct Stmt;

struct Loop {
  std::string induction_var;
  ExprPtr lower, upper, step;
  std::string label;              // empty unless the loop is labelled
  bool from_while = false;        // desugared `while`: upper is __unbounded()
  bool non_normalizable = false;  // set by normalize_loops when flagged
  std::vector<Stmt> body;
};

struct Stmt {
  int id = -1;  // unique within a Program; assigned by the parser
  int line = 0;
  StmtKind kind = StmtKind::Nop;

  // Assign
  std::string var;
  ExprPtr expr;

  // MemAccess; `expr` doubles as the optional stored value for writes
  std::string array;
  std::vector<ExprPtr> indices;
  AccessDir dir = AccessDir::Read;
  bool irregular = false;  // index not affine in induction vars

  // Call
  std::string callee;
  std::vector<ExprPtr> args;

  // ExitBranch
  ExprPtr cond;
  std::string target_label;  // empty = innermost enclosing loop

  // Nop
  Value cost = 0;

  // Loop / If (If reuses `cond`)
  std::shared_ptr<Loop> loop;
  std::vector<Stmt> then_body;
};

Stmt clone(const Stmt& s);  // deep copy with ids preserved

// ---------------------------------------------------------------------------
// Program
// ---------------------------------------------------------------------------

enum class VarKind { Induction, LoopInvariant, MutableLocal, Parameter };

struct ArrayDecl {
  std::string name;
  std::vector<ExprPtr> extents;  // literals or scalar names resolved from inputs
  Value elem_size = 8;
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  std::vector<Stmt> body;
  ExprPtr return_expr;  // optional trailing `return`
  std::map<std::string, VarKind> var_kinds;  // derived
};

struct Program {
  std::vector<ArrayDecl> arrays;
  std::vector<std::string> externs;
  std::vector<Function> functions;
  std::string entry;

  const Function* find_function(const std::string& name) const;
  const ArrayDecl* find_array(const std::string& name) const;
  bool is_extern(const std::string& name) const;
};

Program clone(const Program& p);
bool equal(const Program& a, const Program& b);  // structural; ignores ids/lines

// ---------------------------------------------------------------------------
// Loop nests (derived view)
// ---------------------------------------------------------------------------

struct LoopNest {
  std::string function;
  std::string id;     // "<func>#<k>", k-th outermost loop in source order
  const Stmt* outer = nullptr;
  int depth = 0;      // max nesting depth
  // Loops grouped by level; levels[0] = {outer}. Pointers into the Program.
  std::vector<std::vector<const Stmt*>> levels;
};

// Outermost nests of a function, source order. Pointers are invalidated by
// any mutation of the program.
std::vector<LoopNest> collect_nests(const Function& f);
std::vector<LoopNest> collect_nests(const Program& p);

// Exit branches inside `loop` that leave it (target outside the loop body).
std::vector<const Stmt*> collect_exits(const Stmt& loop_stmt);

// ---------------------------------------------------------------------------
// Parse / print
// ---------------------------------------------------------------------------

// Throws ParseError (syntax) or SemanticError (undefined variable, duplicate
// function, unresolved call target, ...) with line/column diagnostics.
Program parse_program(const std::string& text);

std::string pretty_print(const Program& p);

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Rewrites every counted loop to lower 0 / step 1, preserving iteration
// counts exactly. Loops with step 0, negative step, or a non-literal step
// are flagged non_normalizable and left alone.
Program normalize_loops(const Program& p);

// ---------------------------------------------------------------------------
// Interpreter
// ---------------------------------------------------------------------------

struct CostModel {
  Value assign = 1;
  Value mem_access = 2;
  Value call = 1;
  Value exit_branch = 1;
  Value nop_unit = 1;
  Value if_stmt = 1;
  Value loop_iter = 0;  // charged once per completed iteration
};

struct InvocationRecord {
  std::string nest_id;
  Value enter_time = 0;                      // global cost clock at nest entry
  std::vector<Value> level_totals;           // total iterations per nest level
  Value elapsed = 0;                         // cost units spent inside the nest
  std::map<std::string, Value> entry_values; // scalars in scope at entry + externs
  std::map<std::string, std::set<Value>> touched;  // array -> distinct linear indices
  Value distinct_bytes = 0;
};

struct ExecutionProfile {
  std::vector<InvocationRecord> invocations;
  Value total_cost = 0;
  std::map<std::string, std::set<Value>> touched_global;
};

inline constexpr Value kDefaultIterationCap = 100'000'000;

// Runs the entry function with `inputs` binding its parameters (and any
// externs used). Throws RuntimeFault on unbound inputs or when the global
// iteration cap is exceeded.
ExecutionProfile interpret(const Program& p, const std::map<std::string, Value>& inputs,
                           const CostModel& cost = {},
                           Value iteration_cap = kDefaultIterationCap);

// CSV export/import of profiles: one row per loop invocation.
std::string profile_to_csv(const std::vector<std::pair<std::string, ExecutionProfile>>& runs);
struct ProfileRow {
  std::string input_tag;
  std::string nest_id;
  std::vector<Value> level_totals;
  Value elapsed = 0;
  std::map<std::string, Value> entry_values;
  Value distinct_bytes = 0;
};
std::vector<ProfileRow> profile_from_csv(const std::string& csv);

}  // namespace beacons::ir
