#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>

namespace sigmak::expr {

/// Parse failure with the byte offset of the offending token.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation failure (log of non-positive, division by zero, ...),
/// carrying the source offset of the failing node.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class UnaryOp { Neg, Sqrt, Exp, Log, Sin, Cos, Abs };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

/// Variable slots: x1..x3 (base point), u (height), p1..p3 (gradient).
enum class VarKind { X, U, P };

struct Node {
  enum class Kind { Constant, Variable, Unary, Binary } kind;
  double value = 0.0;        // Constant
  VarKind var = VarKind::X;  // Variable
  int index = 0;             // Variable: 0-based component for X/P
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  std::shared_ptr<const Node> a, b;  // Unary uses a only
  std::size_t src = 0;               // byte offset in the source text
};

struct ExprAst {
  std::shared_ptr<const Node> root;
  int max_x = 0;      // highest x-index used (1-based), 0 if none
  int max_p = 0;      // highest p-index used (1-based), 0 if none
  bool uses_u = false;
  bool uses_abs = false;  // abs is non-smooth; solvers warn on it
};

/// Grammar: + - < * / < unary minus < ^ (right-assoc) < atoms;
/// functions sqrt, exp, log, sin, cos, abs; parentheses.
ExprAst parse(const std::string& text);

/// Fully parenthesized rendering; parse(to_string(ast)) is structurally
/// identical to ast.
std::string to_string(const ExprAst& ast);

bool structurally_equal(const ExprAst& a, const ExprAst& b);

struct Env {
  Eigen::VectorXd x;
  double u = 0.0;
  Eigen::VectorXd p;
};

struct EvalResult {
  double value = 0.0;
  double du = 0.0;
  Eigen::VectorXd dx;
  Eigen::VectorXd dp;
};

double eval(const ExprAst& ast, const Env& env);

/// Value and all first partials by forward-mode dual numbers,
/// one pass per independent variable.
EvalResult eval_with_partials(const ExprAst& ast, const Env& env);

/// Right-hand-side specification psi(x, u, p). Catalog entries normalize
/// to expressions; dependence flags are computed from the tree.
struct PsiSpec {
  ExprAst ast;
  bool depends_on_u() const { return ast.uses_u; }
  bool depends_on_p() const { return ast.max_p > 0; }
  bool has_abs() const { return ast.uses_abs; }

  double value(const Env& env) const { return eval(ast, env); }
  EvalResult partials(const Env& env) const { return eval_with_partials(ast, env); }

  static PsiSpec constant(double c);
  /// sigma_k of the radius-R umbilic graph: the constant binomial(n,k)/R^k.
  static PsiSpec hyperboloid_curvature(int n, int k, double radius);
  static PsiSpec expression(const std::string& text);
  /// scale * psi^exponent, as an expression transform (psi must stay positive).
  static PsiSpec power_scaled(const PsiSpec& base, double scale, double exponent);
};

/// Thrown when sampled psi fails strict positivity.
class PositivityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SampledBounds {
  double inf_psi = 0.0;
  double sup_psi = 0.0;
  double sup_abs_grad = 0.0;  // sup of |(d_x psi, d_u psi, d_p psi)|_2
  double min_psi_u = 0.0;     // sampled lower bound of the u-partial
};

/// Deterministic bounds over box x u_range x {|p| <= p_radius}: a coarse
/// tensor lattice plus a Halton sequence. Slots the expression does not use
/// are pinned at midpoints. Throws PositivityViolation if inf <= 0.
SampledBounds sample_bounds(const PsiSpec& spec, const Eigen::VectorXd& box_lo,
                            const Eigen::VectorXd& box_hi, double u_lo, double u_hi,
                            double p_radius, int halton_points = 4096);

}  // namespace sigmak::expr
