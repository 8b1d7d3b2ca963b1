#include "sigmak/expr.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

#include "sigmak/sampling.hpp"
#include "sigmak/symfun.hpp"

namespace sigmak::expr {

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_const(double v, std::size_t src = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Constant;
  n->value = v;
  n->src = src;
  return n;
}

NodePtr make_var(VarKind kind, int index, std::size_t src = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Variable;
  n->var = kind;
  n->index = index;
  n->src = src;
  return n;
}

NodePtr make_unary(UnaryOp op, NodePtr a, std::size_t src = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Unary;
  n->uop = op;
  n->a = std::move(a);
  n->src = src;
  return n;
}

NodePtr make_binary(BinaryOp op, NodePtr a, NodePtr b, std::size_t src = 0) {
  auto n = std::make_shared<Node>();
  n->kind = Node::Kind::Binary;
  n->bop = op;
  n->a = std::move(a);
  n->b = std::move(b);
  n->src = src;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr run() {
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) {
      throw ParseError("unexpected trailing input", pos_);
    }
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool at(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool eat(char c) {
    if (at(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_term();
    while (true) {
      const std::size_t here = pos_;
      if (eat('+')) {
        lhs = make_binary(BinaryOp::Add, lhs, parse_term(), here);
      } else if (eat('-')) {
        lhs = make_binary(BinaryOp::Sub, lhs, parse_term(), here);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    while (true) {
      const std::size_t here = pos_;
      if (eat('*')) {
        lhs = make_binary(BinaryOp::Mul, lhs, parse_unary(), here);
      } else if (eat('/')) {
        lhs = make_binary(BinaryOp::Div, lhs, parse_unary(), here);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    skip_ws();
    const std::size_t here = pos_;
    if (eat('-')) {
      return make_unary(UnaryOp::Neg, parse_unary(), here);
    }
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    skip_ws();
    const std::size_t here = pos_;
    if (eat('^')) {
      // Right-associative, exponent may carry a unary minus.
      return make_binary(BinaryOp::Pow, base, parse_unary(), here);
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) {
      throw ParseError("unexpected end of input", pos_);
    }
    const std::size_t here = pos_;
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr inner = parse_sum();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      return parse_number();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      return parse_ident();
    }
    throw ParseError(std::string("unexpected character '") + c + "'", here);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(text_.substr(start), &used);
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
    pos_ = start + used;
    return make_const(v, start);
  }

  NodePtr parse_ident() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
      ++pos_;
    }
    const std::string name = text_.substr(start, pos_ - start);

    if (name.size() == 2 && (name[0] == 'x' || name[0] == 'p') &&
        name[1] >= '1' && name[1] <= '3') {
      const int idx = name[1] - '1';
      return make_var(name[0] == 'x' ? VarKind::X : VarKind::P, idx, start);
    }
    if (name == "u") return make_var(VarKind::U, 0, start);

    UnaryOp op;
    if (name == "sqrt") op = UnaryOp::Sqrt;
    else if (name == "exp") op = UnaryOp::Exp;
    else if (name == "log") op = UnaryOp::Log;
    else if (name == "sin") op = UnaryOp::Sin;
    else if (name == "cos") op = UnaryOp::Cos;
    else if (name == "abs") op = UnaryOp::Abs;
    else throw ParseError("unknown identifier '" + name + "'", start);

    if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
    NodePtr arg = parse_sum();
    if (!eat(')')) throw ParseError("expected ')'", pos_);
    return make_unary(op, arg, start);
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

void scan(const NodePtr& n, ExprAst& ast) {
  if (!n) return;
  if (n->kind == Node::Kind::Variable) {
    if (n->var == VarKind::X) ast.max_x = std::max(ast.max_x, n->index + 1);
    if (n->var == VarKind::P) ast.max_p = std::max(ast.max_p, n->index + 1);
    if (n->var == VarKind::U) ast.uses_u = true;
  }
  if (n->kind == Node::Kind::Unary && n->uop == UnaryOp::Abs) ast.uses_abs = true;
  scan(n->a, ast);
  scan(n->b, ast);
}

ExprAst finish(NodePtr root) {
  ExprAst ast;
  ast.root = std::move(root);
  scan(ast.root, ast);
  return ast;
}

// Dual number for one directional derivative.
struct Dual {
  double v = 0.0;
  double d = 0.0;
};

[[noreturn]] void eval_fail(const char* what, const Node& n) {
  throw EvalError(std::string(what) + " (node at offset " + std::to_string(n.src) + ")");
}

Dual eval_dual(const Node& n, const Env& env, VarKind seed_kind, int seed_index) {
  switch (n.kind) {
    case Node::Kind::Constant:
      return {n.value, 0.0};
    case Node::Kind::Variable: {
      double v = 0.0;
      switch (n.var) {
        case VarKind::X:
          if (n.index >= env.x.size()) eval_fail("x-variable beyond environment dimension", n);
          v = env.x[n.index];
          break;
        case VarKind::U:
          v = env.u;
          break;
        case VarKind::P:
          if (n.index >= env.p.size()) eval_fail("p-variable beyond environment dimension", n);
          v = env.p[n.index];
          break;
      }
      const bool seeded = (n.var == seed_kind && n.index == seed_index);
      return {v, seeded ? 1.0 : 0.0};
    }
    case Node::Kind::Unary: {
      const Dual a = eval_dual(*n.a, env, seed_kind, seed_index);
      switch (n.uop) {
        case UnaryOp::Neg:
          return {-a.v, -a.d};
        case UnaryOp::Sqrt: {
          if (a.v < 0.0) eval_fail("sqrt of negative value", n);
          const double r = std::sqrt(a.v);
          return {r, a.d == 0.0 ? 0.0 : 0.5 * a.d / r};
        }
        case UnaryOp::Exp: {
          const double e = std::exp(a.v);
          return {e, a.d * e};
        }
        case UnaryOp::Log:
          if (a.v <= 0.0) eval_fail("log of non-positive value", n);
          return {std::log(a.v), a.d / a.v};
        case UnaryOp::Sin:
          return {std::sin(a.v), a.d * std::cos(a.v)};
        case UnaryOp::Cos:
          return {std::cos(a.v), -a.d * std::sin(a.v)};
        case UnaryOp::Abs:
          return {std::abs(a.v), a.v >= 0.0 ? a.d : -a.d};
      }
      eval_fail("unhandled unary operator", n);
    }
    case Node::Kind::Binary: {
      const Dual a = eval_dual(*n.a, env, seed_kind, seed_index);
      const Dual b = eval_dual(*n.b, env, seed_kind, seed_index);
      switch (n.bop) {
        case BinaryOp::Add:
          return {a.v + b.v, a.d + b.d};
        case BinaryOp::Sub:
          return {a.v - b.v, a.d - b.d};
        case BinaryOp::Mul:
          return {a.v * b.v, a.d * b.v + a.v * b.d};
        case BinaryOp::Div:
          if (b.v == 0.0) eval_fail("division by zero", n);
          return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
        case BinaryOp::Pow: {
          // a^b: general positive base; negative base only for constant
          // integer exponents.
          if (a.v > 0.0) {
            const double val = std::pow(a.v, b.v);
            const double der =
                val * (b.d * std::log(a.v) + b.v * a.d / a.v);
            return {val, der};
          }
          const bool int_exp =
              (b.d == 0.0) && (b.v == std::floor(b.v)) && std::isfinite(b.v);
          if (!int_exp) eval_fail("power with non-positive base and non-integer exponent", n);
          if (a.v == 0.0) {
            if (b.v <= 0.0) eval_fail("zero base with non-positive exponent", n);
            const double val = 0.0;
            const double der = (b.v == 1.0) ? a.d : 0.0;
            return {val, der};
          }
          const double val = std::pow(a.v, b.v);
          const double der = b.v * std::pow(a.v, b.v - 1.0) * a.d;
          return {val, der};
        }
      }
      eval_fail("unhandled binary operator", n);
    }
  }
  throw EvalError("corrupt expression tree");
}

void print_node(const NodePtr& n, std::ostringstream& out) {
  switch (n->kind) {
    case Node::Kind::Constant: {
      std::ostringstream tmp;
      tmp.precision(17);
      tmp << n->value;
      const std::string s = tmp.str();
      if (n->value < 0.0) {
        out << "(" << s << ")";
      } else {
        out << s;
      }
      return;
    }
    case Node::Kind::Variable:
      switch (n->var) {
        case VarKind::X: out << "x" << (n->index + 1); return;
        case VarKind::U: out << "u"; return;
        case VarKind::P: out << "p" << (n->index + 1); return;
      }
      return;
    case Node::Kind::Unary: {
      const char* name = nullptr;
      switch (n->uop) {
        case UnaryOp::Neg: name = nullptr; break;
        case UnaryOp::Sqrt: name = "sqrt"; break;
        case UnaryOp::Exp: name = "exp"; break;
        case UnaryOp::Log: name = "log"; break;
        case UnaryOp::Sin: name = "sin"; break;
        case UnaryOp::Cos: name = "cos"; break;
        case UnaryOp::Abs: name = "abs"; break;
      }
      if (name == nullptr) {
        out << "(-";
        print_node(n->a, out);
        out << ")";
      } else {
        out << name << "(";
        print_node(n->a, out);
        out << ")";
      }
      return;
    }
    case Node::Kind::Binary: {
      char op = '?';
      switch (n->bop) {
        case BinaryOp::Add: op = '+'; break;
        case BinaryOp::Sub: op = '-'; break;
        case BinaryOp::Mul: op = '*'; break;
        case BinaryOp::Div: op = '/'; break;
        case BinaryOp::Pow: op = '^'; break;
      }
      out << "(";
      print_node(n->a, out);
      out << op;
      print_node(n->b, out);
      out << ")";
      return;
    }
  }
}

bool node_equal(const NodePtr& a, const NodePtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Node::Kind::Constant:
      return a->value == b->value;
    case Node::Kind::Variable:
      return a->var == b->var && a->index == b->index;
    case Node::Kind::Unary:
      return a->uop == b->uop && node_equal(a->a, b->a);
    case Node::Kind::Binary:
      return a->bop == b->bop && node_equal(a->a, b->a) && node_equal(a->b, b->b);
  }
  return false;
}

}  // namespace

ExprAst parse(const std::string& text) {
  if (text.empty()) throw ParseError("empty expression", 0);
  Parser p(text);
  return finish(p.run());
}

std::string to_string(const ExprAst& ast) {
  std::ostringstream out;
  print_node(ast.root, out);
  return out.str();
}

bool structurally_equal(const ExprAst& a, const ExprAst& b) {
  return node_equal(a.root, b.root);
}

double eval(const ExprAst& ast, const Env& env) {
  // A derivative pass with an unused seed slot doubles as plain evaluation.
  return eval_dual(*ast.root, env, VarKind::X, -1).v;
}

EvalResult eval_with_partials(const ExprAst& ast, const Env& env) {
  EvalResult r;
  r.dx = Eigen::VectorXd::Zero(env.x.size());
  r.dp = Eigen::VectorXd::Zero(env.p.size());
  r.value = eval(ast, env);
  for (int i = 0; i < ast.max_x; ++i) {
    r.dx[i] = eval_dual(*ast.root, env, VarKind::X, i).d;
  }
  if (ast.uses_u) {
    r.du = eval_dual(*ast.root, env, VarKind::U, 0).d;
  }
  for (int i = 0; i < ast.max_p; ++i) {
    r.dp[i] = eval_dual(*ast.root, env, VarKind::P, i).d;
  }
  return r;
}

PsiSpec PsiSpec::constant(double c) {
  if (!(c > 0.0)) {
    throw std::invalid_argument("PsiSpec::constant: value must be positive");
  }
  PsiSpec s;
  s.ast = finish(make_const(c));
  return s;
}

PsiSpec PsiSpec::hyperboloid_curvature(int n, int k, double radius) {
  if (radius <= 0.0) {
    throw std::invalid_argument("PsiSpec::hyperboloid_curvature: radius must be positive");
  }
  return constant(symfun::binomial(n, k) / std::pow(radius, k));
}

PsiSpec PsiSpec::expression(const std::string& text) {
  PsiSpec s;
  s.ast = parse(text);
  return s;
}

PsiSpec PsiSpec::power_scaled(const PsiSpec& base, double scale, double exponent) {
  PsiSpec s;
  s.ast = finish(make_binary(
      BinaryOp::Mul, make_const(scale),
      make_binary(BinaryOp::Pow, base.ast.root, make_const(exponent))));
  return s;
}

SampledBounds sample_bounds(const PsiSpec& spec, const Eigen::VectorXd& box_lo,
                            const Eigen::VectorXd& box_hi, double u_lo, double u_hi,
                            double p_radius, int halton_points) {
  const int n = static_cast<int>(box_lo.size());
  if (box_hi.size() != n) {
    throw std::invalid_argument("sample_bounds: box dimension mismatch");
  }
  const bool use_u = spec.depends_on_u();
  const bool use_p = spec.depends_on_p();

  SampledBounds out;
  out.inf_psi = std::numeric_limits<double>::infinity();
  out.sup_psi = -std::numeric_limits<double>::infinity();
  out.sup_abs_grad = 0.0;
  out.min_psi_u = std::numeric_limits<double>::infinity();

  const int dim = n + (use_u ? 1 : 0) + (use_p ? n : 0);

  auto probe = [&](const Eigen::VectorXd& unit) {
    Env env;
    env.x = Eigen::VectorXd(n);
    for (int d = 0; d < n; ++d) {
      env.x[d] = box_lo[d] + unit[d] * (box_hi[d] - box_lo[d]);
    }
    int slot = n;
    env.u = use_u ? (u_lo + unit[slot] * (u_hi - u_lo)) : 0.5 * (u_lo + u_hi);
    if (use_u) ++slot;
    env.p = Eigen::VectorXd::Zero(n);
    if (use_p) {
      for (int d = 0; d < n; ++d) {
        env.p[d] = (2.0 * unit[slot + d] - 1.0) * p_radius;
      }
      if (env.p.norm() > p_radius && env.p.norm() > 0.0) {
        env.p *= p_radius / env.p.norm();
      }
    }
    const EvalResult r = spec.partials(env);
    out.inf_psi = std::min(out.inf_psi, r.value);
    out.sup_psi = std::max(out.sup_psi, r.value);
    const double grad =
        std::sqrt(r.dx.squaredNorm() + r.du * r.du + r.dp.squaredNorm());
    out.sup_abs_grad = std::max(out.sup_abs_grad, grad);
    out.min_psi_u = std::min(out.min_psi_u, r.du);
  };

  // Coarse tensor lattice (3 levels per active slot) nails extrema that sit
  // on corners or edges of the region.
  const int levels = 3;
  int lattice_total = 1;
  for (int d = 0; d < dim; ++d) lattice_total *= levels;
  if (lattice_total <= 6561) {
    Eigen::VectorXd unit(dim);
    for (int p = 0; p < lattice_total; ++p) {
      int rem = p;
      for (int d = 0; d < dim; ++d) {
        unit[d] = static_cast<double>(rem % levels) / (levels - 1);
        rem /= levels;
      }
      probe(unit);
    }
  }
  for (int i = 0; i < halton_points; ++i) {
    probe(sampling::halton_point(i, dim));
  }

  if (!(out.inf_psi > 0.0)) {
    throw PositivityViolation(
        "sample_bounds: sampled psi reaches " + std::to_string(out.inf_psi) +
        "; right-hand side must be strictly positive");
  }
  return out;
}

}  // namespace sigmak::expr
