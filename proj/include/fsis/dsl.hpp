// Piecewise closed-form Fourier transforms of one-dimensional generators,
// plus externally sampled fiber tables for generators in any dimension.
//
// Expression grammar:
//   expr   := term (("+" | "-") term)*
//   term   := factor (("*" | "/") factor)*
//   factor := "-" factor | atom
//   atom   := number | "pi" | "i" | "w" | func "(" expr ")" | "(" expr ")"
//   func   := "cos" | "sin" | "exp"
// All arithmetic is complex. `w` is the real frequency argument.
#pragma once

#include "fsis/common.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace fsis::dsl {

// ---------------------------------------------------------------------------
// Exact rational endpoints
// ---------------------------------------------------------------------------

/// Exact fraction num/den with den > 0 in lowest terms. Both parts stay
/// below 2^53 so they convert to double without rounding.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static constexpr std::int64_t kMaxMagnitude = std::int64_t{1} << 53;

  static Rational make(std::int64_t num, std::int64_t den) {
    if (den == 0) throw Error("rational with zero denominator");
    if (den < 0) num = -num, den = -den;
    const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) num /= g, den /= g;
    if (num >= kMaxMagnitude || num <= -kMaxMagnitude || den >= kMaxMagnitude)
      throw Error("rational endpoint too large for exact representation");
    return Rational{num, den};
  }

  /// Accepts "p/q", integers and decimals with at most 12 fractional digits.
  static Rational parse(std::string_view text) {
    auto trim = [](std::string_view s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
      return s;
    };
    text = trim(text);
    if (text.empty()) throw Error("empty rational");

    auto parse_int = [](std::string_view s) {
      std::int64_t value = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
      if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
        throw Error("malformed rational '" + std::string(s) + "'");
      return value;
    };

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
      return make(parse_int(trim(text.substr(0, slash))), parse_int(trim(text.substr(slash + 1))));
    }

    bool negative = false;
    std::string_view body = text;
    if (body.front() == '-' || body.front() == '+') {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    const auto dot = body.find('.');
    std::string_view whole = body.substr(0, dot);
    std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
    if (whole.empty() && frac.empty()) throw Error("malformed rational '" + std::string(text) + "'");
    if (frac.size() > 12) throw Error("decimal endpoint '" + std::string(text) + "' has more than 12 fractional digits");
    for (char c : whole)
      if (!std::isdigit(static_cast<unsigned char>(c))) throw Error("malformed rational '" + std::string(text) + "'");
    for (char c : frac)
      if (!std::isdigit(static_cast<unsigned char>(c))) throw Error("malformed rational '" + std::string(text) + "'");
    if (whole.size() > 6) throw Error("endpoint '" + std::string(text) + "' out of range");

    std::int64_t den = 1;
    for (std::size_t k = 0; k < frac.size(); ++k) den *= 10;
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    const std::int64_t num = w * den + f;
    return make(negative ? -num : num, den);
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  /// Sign of (x - num/den), decided exactly. fma rounds once, and correct
  /// rounding never flips the sign of x*den - num.
  int compare_to(double x) const {
    const double r = std::fma(x, static_cast<double>(den), -static_cast<double>(num));
    return (r > 0) - (r < 0);
  }

  std::string to_string() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }

  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
};

/// floor of a rational, exact.
inline std::int64_t floor_of(const Rational& r) {
  std::int64_t q = r.num / r.den;
  if (r.num % r.den != 0 && r.num < 0) --q;
  return q;
}

/// ceil of a rational, exact.
inline std::int64_t ceil_of(const Rational& r) {
  std::int64_t q = r.num / r.den;
  if (r.num % r.den != 0 && r.num > 0) ++q;
  return q;
}

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class NodeKind { number, pi, imaginary_unit, variable, negate, add, subtract, multiply, divide, cos, sin, exp };

struct Node {
  NodeKind kind;
  double value = 0.0;  // number literals only
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

/// Immutable expression tree. Copies share structure.
class Expression {
 public:
  Expression() = default;
  explicit Expression(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  static Expression number(double v) { return Expression(std::make_shared<const Node>(Node{NodeKind::number, v, {}, {}})); }
  static Expression leaf(NodeKind k) { return Expression(std::make_shared<const Node>(Node{k, 0.0, {}, {}})); }
  static Expression unary(NodeKind k, Expression arg) {
    return Expression(std::make_shared<const Node>(Node{k, 0.0, std::move(arg.root_), {}}));
  }
  static Expression binary(NodeKind k, Expression l, Expression r) {
    return Expression(std::make_shared<const Node>(Node{k, 0.0, std::move(l.root_), std::move(r.root_)}));
  }

  bool empty() const { return !root_; }
  const Node* root() const { return root_.get(); }

  /// Value at real frequency w. Throws EvaluationError on division by zero
  /// or a non-finite result.
  Complex evaluate(double w) const {
    if (!root_) throw Error("evaluating an empty expression");
    const Complex v = eval(*root_, w);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw EvaluationError("non-finite expression value", w);
    return v;
  }

  /// Fully parenthesised text; parse(to_string()) rebuilds the same tree.
  std::string to_string() const {
    std::string out;
    if (root_) print(*root_, out);
    return out;
  }

  friend bool operator==(const Expression& a, const Expression& b) { return same_tree(a.root_.get(), b.root_.get()); }

 private:
  static Complex eval(const Node& n, double w) {
    switch (n.kind) {
      case NodeKind::number: return {n.value, 0.0};
      case NodeKind::pi: return {std::numbers::pi, 0.0};
      case NodeKind::imaginary_unit: return {0.0, 1.0};
      case NodeKind::variable: return {w, 0.0};
      case NodeKind::negate: return -eval(*n.lhs, w);
      case NodeKind::add: return eval(*n.lhs, w) + eval(*n.rhs, w);
      case NodeKind::subtract: return eval(*n.lhs, w) - eval(*n.rhs, w);
      case NodeKind::multiply: return eval(*n.lhs, w) * eval(*n.rhs, w);
      case NodeKind::divide: {
        const Complex num = eval(*n.lhs, w);
        const Complex den = eval(*n.rhs, w);
        if (den == Complex{0.0, 0.0}) throw EvaluationError("division by zero", w);
        return num / den;
      }
      case NodeKind::cos: return std::cos(eval(*n.lhs, w));
      case NodeKind::sin: return std::sin(eval(*n.lhs, w));
      case NodeKind::exp: return std::exp(eval(*n.lhs, w));
    }
    throw Error("corrupt expression node");
  }

  static void print(const Node& n, std::string& out) {
    auto binary_op = [&](const char* op) {
      out += '(';
      print(*n.lhs, out);
      out += op;
      print(*n.rhs, out);
      out += ')';
    };
    auto call = [&](const char* name) {
      out += name;
      out += '(';
      print(*n.lhs, out);
      out += ')';
    };
    switch (n.kind) {
      case NodeKind::number: out += format_double(n.value); break;
      case NodeKind::pi: out += "pi"; break;
      case NodeKind::imaginary_unit: out += "i"; break;
      case NodeKind::variable: out += "w"; break;
      case NodeKind::negate:
        out += '-';
        print(*n.lhs, out);
        break;
      case NodeKind::add: binary_op(" + "); break;
      case NodeKind::subtract: binary_op(" - "); break;
      case NodeKind::multiply: binary_op(" * "); break;
      case NodeKind::divide: binary_op(" / "); break;
      case NodeKind::cos: call("cos"); break;
      case NodeKind::sin: call("sin"); break;
      case NodeKind::exp: call("exp"); break;
    }
  }

  static bool same_tree(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    if (a->kind == NodeKind::number && a->value != b->value) return false;
    return same_tree(a->lhs.get(), b->lhs.get()) && same_tree(a->rhs.get(), b->rhs.get());
  }

  std::shared_ptr<const Node> root_;
};

namespace detail {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  Expression parse() {
    Expression e = expr();
    skip_space();
    if (pos_ != text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but reached end of input", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expression expr() {
    Expression lhs = term();
    for (;;) {
      if (accept('+'))
        lhs = Expression::binary(NodeKind::add, lhs, term());
      else if (accept('-'))
        lhs = Expression::binary(NodeKind::subtract, lhs, term());
      else
        return lhs;
    }
  }

  Expression term() {
    Expression lhs = factor();
    for (;;) {
      if (accept('*'))
        lhs = Expression::binary(NodeKind::multiply, lhs, factor());
      else if (accept('/'))
        lhs = Expression::binary(NodeKind::divide, lhs, factor());
      else
        return lhs;
    }
  }

  Expression factor() {
    if (accept('-')) return Expression::unary(NodeKind::negate, factor());
    return atom();
  }

  Expression atom() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expression inner = expr();
      expect(')');
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expression number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_, ++n;
      return n;
    };
    std::size_t count = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      count += digits();
    }
    if (count == 0) throw ParseError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // 'e' belongs to whatever follows
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (ec != std::errc{} || ptr != text_.data() + pos_) throw ParseError("number out of range", start);
    return Expression::number(value);
  }

  Expression identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view name = text_.substr(start, pos_ - start);
    if (name == "pi") return Expression::leaf(NodeKind::pi);
    if (name == "i") return Expression::leaf(NodeKind::imaginary_unit);
    if (name == "w") return Expression::leaf(NodeKind::variable);

    NodeKind fn;
    if (name == "cos")
      fn = NodeKind::cos;
    else if (name == "sin")
      fn = NodeKind::sin;
    else if (name == "exp")
      fn = NodeKind::exp;
    else
      throw ParseError("unknown identifier '" + std::string(name) + "'", start);

    expect('(');
    Expression arg = expr();
    expect(')');
    return Expression::unary(fn, arg);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expression parse_expression(std::string_view text) {
  if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw ParseError("empty expression", 0);
  return detail::ExpressionParser(text).parse();
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

struct Piece {
  Rational lo;
  Rational hi;
  Expression expr;

  bool contains(double xi) const { return lo.compare_to(xi) >= 0 && hi.compare_to(xi) < 0; }
};

/// Compactly supported piecewise Fourier transform: expr on [lo, hi), 0 elsewhere.
/// Pieces are kept sorted by lower endpoint and are pairwise disjoint.
struct PiecewiseSpec {
  std::vector<Piece> pieces;
};

using Index = std::vector<std::int64_t>;

/// Fiber values supplied on a fixed grid: column `node` holds the fiber at
/// that grid node, row r corresponds to window[r].
struct SampledFibers {
  std::size_t dimension = 1;
  std::size_t grid_size = 0;  // nodes per axis
  std::vector<Index> window;  // sorted lexicographically
  Matrix values;              // |window| x grid_size^dimension
  std::string source;
};

struct GeneratorSpec {
  std::string name;
  std::variant<PiecewiseSpec, SampledFibers> body;

  bool is_piecewise() const { return std::holds_alternative<PiecewiseSpec>(body); }
  std::size_t dimension() const { return is_piecewise() ? 1 : std::get<SampledFibers>(body).dimension; }
};

/// Sorts pieces and rejects empty, inverted or overlapping intervals.
inline PiecewiseSpec make_piecewise(std::vector<Piece> pieces, const std::string& field = "pieces") {
  for (std::size_t k = 0; k < pieces.size(); ++k)
    if (!(pieces[k].lo < pieces[k].hi))
      throw SchemaError(field + "[" + std::to_string(k) + "]", "interval [" + pieces[k].lo.to_string() + ", " +
                                                                   pieces[k].hi.to_string() + ") is empty");
  std::stable_sort(pieces.begin(), pieces.end(), [](const Piece& a, const Piece& b) { return a.lo < b.lo; });
  for (std::size_t k = 1; k < pieces.size(); ++k)
    if (pieces[k].lo < pieces[k - 1].hi)
      throw SchemaError(field, "overlapping pieces [" + pieces[k - 1].lo.to_string() + ", " + pieces[k - 1].hi.to_string() +
                                   ") and [" + pieces[k].lo.to_string() + ", " + pieces[k].hi.to_string() + ")");
  return PiecewiseSpec{std::move(pieces)};
}

/// Fourier transform value of a piecewise generator at xi. At a shared
/// endpoint the half-open convention [lo, hi) decides membership.
inline Complex evaluate_fourier(const GeneratorSpec& g, double xi) {
  const auto* spec = std::get_if<PiecewiseSpec>(&g.body);
  if (!spec) throw Error("generator '" + g.name + "' has sampled fibers; no closed form to evaluate");
  for (const Piece& p : spec->pieces) {
    if (p.contains(xi)) {
      try {
        return p.expr.evaluate(xi);
      } catch (const EvaluationError& e) {
        throw EvaluationError("generator '" + g.name + "': " + std::string(e.what()), xi);
      }
    }
  }
  return {0.0, 0.0};
}

namespace detail {

inline Rational parse_endpoint(const nlohmann::json& j, const std::string& path) {
  std::string text;
  if (j.is_string()) {
    text = j.get<std::string>();
  } else if (j.is_number_integer()) {
    text = std::to_string(j.get<std::int64_t>());
  } else if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "unbounded support");
    text = format_double(v);
  } else {
    throw SchemaError(path, "endpoint must be a string or number");
  }
  std::string lowered;
  for (char c : text) lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lowered.find("inf") != std::string::npos) throw SchemaError(path, "unbounded support");
  try {
    return Rational::parse(text);
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError(path, e.what());
  }
}

inline bool index_less(const Index& a, const Index& b) { return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()); }

}  // namespace detail

/// Number of grid nodes for `per_axis` nodes along each of `dimension` axes.
inline std::size_t grid_node_count(std::size_t dimension, std::size_t per_axis) {
  std::size_t total = 1;
  for (std::size_t k = 0; k < dimension; ++k) total *= per_axis;
  return total;
}

/// Reads a sidecar CSV with rows `node, k_1..k_n, re, im`. An optional header
/// row and '#' comment lines are skipped. (node, k) pairs that are absent are
/// zero, but every node must appear at least once.
inline SampledFibers load_sampled_fibers(const std::filesystem::path& file, std::size_t dimension, std::size_t grid_size,
                                         std::vector<Index> window, const std::string& path = "sampled") {
  if (dimension == 0) throw SchemaError(path, "dimension must be positive");
  if (grid_size == 0) throw SchemaError(path + ".grid", "grid must be positive");
  for (const Index& k : window)
    if (k.size() != dimension) throw SchemaError(path + ".window", "index of wrong dimension");
  std::sort(window.begin(), window.end(), detail::index_less);
  if (std::adjacent_find(window.begin(), window.end()) != window.end()) throw SchemaError(path + ".window", "duplicate index");

  std::ifstream in(file);
  if (!in) throw SchemaError(path + ".file", "cannot open '" + file.string() + "'");

  const std::size_t nodes = grid_node_count(dimension, grid_size);
  SampledFibers out{dimension, grid_size, window, Matrix::Zero(static_cast<Eigen::Index>(window.size()), static_cast<Eigen::Index>(nodes)),
                    file.string()};
  std::vector<char> seen_node(nodes, 0);
  std::vector<char> seen_entry(window.size() * nodes, 0);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    const std::string where = file.filename().string() + ":" + std::to_string(line_no);
    auto to_double = [&](const std::string& s, bool& ok) {
      std::size_t b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      double v = 0;
      ok = false;
      if (b == std::string::npos) return v;
      auto [ptr, ec] = std::from_chars(s.data() + b, s.data() + e + 1, v);
      ok = ec == std::errc{} && ptr == s.data() + e + 1;
      return v;
    };
    bool ok = false;
    to_double(cells.empty() ? std::string{} : cells[0], ok);
    if (!ok && line_no == 1) continue;  // header
    if (cells.size() != dimension + 3) throw SchemaError(where, "expected " + std::to_string(dimension + 3) + " columns");

    std::vector<double> numbers(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      numbers[c] = to_double(cells[c], ok);
      if (!ok) throw SchemaError(where, "non-numeric cell '" + cells[c] + "'");
    }
    auto as_int = [&](double v) {
      if (v != std::floor(v)) throw SchemaError(where, "non-integer index");
      return static_cast<std::int64_t>(v);
    };
    const std::int64_t node = as_int(numbers[0]);
    if (node < 0 || static_cast<std::size_t>(node) >= nodes) throw SchemaError(where, "node index out of range");
    Index k(dimension);
    for (std::size_t d = 0; d < dimension; ++d) k[d] = as_int(numbers[1 + d]);
    auto it = std::lower_bound(window.begin(), window.end(), k, detail::index_less);
    if (it == window.end() || *it != k) throw SchemaError(where, "window index not declared in the generator window");
    const auto row = static_cast<std::size_t>(it - window.begin());
    const auto col = static_cast<std::size_t>(node);
    if (seen_entry[col * window.size() + row]) throw SchemaError(where, "duplicate (node, index) entry");
    seen_entry[col * window.size() + row] = 1;
    seen_node[col] = 1;
    out.values(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = Complex(numbers[dimension + 1], numbers[dimension + 2]);
  }
  for (std::size_t n = 0; n < nodes; ++n)
    if (!seen_node[n]) throw SchemaError(path + ".file", "grid node " + std::to_string(n) + " not covered by '" + file.string() + "'");
  return out;
}

struct GeneratorOptions {
  std::size_t dimension = 1;
  std::filesystem::path base_directory = ".";
};

/// Builds a generator from a scenario record:
///   {"name": "phi", "pieces": [{"interval": ["0", "1/2"], "expr": "1"}]}
///   {"name": "g", "sampled": {"file": "g.csv", "grid": 64, "window": [[0, 0], [0, 1]]}}
inline GeneratorSpec parse_generator(const nlohmann::json& record, const GeneratorOptions& options = {},
                                     const std::string& path = "generator") {
  if (!record.is_object()) throw SchemaError(path, "generator record must be an object");
  if (!record.contains("name") || !record["name"].is_string() || record["name"].get<std::string>().empty())
    throw SchemaError(path + ".name", "missing generator name");
  GeneratorSpec g;
  g.name = record["name"].get<std::string>();

  const bool has_pieces = record.contains("pieces");
  const bool has_sampled = record.contains("sampled");
  if (has_pieces == has_sampled) throw SchemaError(path, "exactly one of 'pieces' or 'sampled' is required");

  if (has_pieces) {
    if (options.dimension != 1) throw SchemaError(path + ".pieces", "piecewise generators are one-dimensional only");
    const auto& list = record["pieces"];
    if (!list.is_array()) throw SchemaError(path + ".pieces", "must be an array");
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = path + ".pieces[" + std::to_string(k) + "]";
      const auto& rec = list[k];
      if (!rec.is_object() || !rec.contains("interval") || !rec.contains("expr"))
        throw SchemaError(p, "piece needs 'interval' and 'expr'");
      const auto& iv = rec["interval"];
      if (!iv.is_array() || iv.size() != 2) throw SchemaError(p + ".interval", "must be [lo, hi]");
      if (!rec["expr"].is_string()) throw SchemaError(p + ".expr", "must be a string");
      Piece piece{detail::parse_endpoint(iv[0], p + ".interval[0]"), detail::parse_endpoint(iv[1], p + ".interval[1]"), {}};
      try {
        piece.expr = parse_expression(rec["expr"].get<std::string>());
      } catch (const ParseError& e) {
        throw SchemaError(p + ".expr", e.what());
      }
      pieces.push_back(std::move(piece));
    }
    g.body = make_piecewise(std::move(pieces), path + ".pieces");
    return g;
  }

  const auto& s = record["sampled"];
  if (!s.is_object()) throw SchemaError(path + ".sampled", "must be an object");
  for (const char* key : {"file", "grid", "window"})
    if (!s.contains(key)) throw SchemaError(path + ".sampled." + key, "missing");
  if (!s["file"].is_string()) throw SchemaError(path + ".sampled.file", "must be a string");
  if (!s["grid"].is_number_unsigned() || s["grid"].get<std::size_t>() == 0)
    throw SchemaError(path + ".sampled.grid", "must be a positive integer");
  std::vector<Index> window;
  if (!s["window"].is_array()) throw SchemaError(path + ".sampled.window", "must be an array of index arrays");
  for (const auto& k : s["window"]) {
    if (k.is_number_integer()) {
      window.push_back(Index{k.get<std::int64_t>()});
    } else if (k.is_array()) {
      Index idx;
      for (const auto& c : k) {
        if (!c.is_number_integer()) throw SchemaError(path + ".sampled.window", "indices must be integers");
        idx.push_back(c.get<std::int64_t>());
      }
      window.push_back(std::move(idx));
    } else {
      throw SchemaError(path + ".sampled.window", "indices must be integers or integer arrays");
    }
  }
  std::filesystem::path file = s["file"].get<std::string>();
  if (file.is_relative()) file = options.base_directory / file;
  g.body = load_sampled_fibers(file, options.dimension, s["grid"].get<std::size_t>(), std::move(window), path + ".sampled");
  return g;
}

}  // namespace fsis::dsl
