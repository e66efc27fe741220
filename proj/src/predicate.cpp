#include "cew/predicate.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

namespace cew {
namespace {

struct Token {
  enum class Type { Ident, Number, Symbol, End };
  Type type;
  std::string text;
  Natural number = 0;
  std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#') {  // comment to end of line
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c))) {
      Natural v = 0;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
        const Natural d = static_cast<Natural>(src[i] - '0');
        if (v > (~Natural{0} - d) / 10) throw ParseError("number too large", start);
        v = v * 10 + d;
        ++i;
      }
      out.push_back({Token::Type::Number, std::string(src.substr(start, i - start)), v, start});
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) {
        ++i;
      }
      out.push_back({Token::Type::Ident, std::string(src.substr(start, i - start)), 0, start});
      continue;
    }
    static constexpr std::string_view two[] = {":=", "!=", "<=", ">="};
    bool matched = false;
    for (auto op : two) {
      if (src.substr(i, 2) == op) {
        out.push_back({Token::Type::Symbol, std::string(op), 0, start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("()+*=<>.,").find(c) != std::string_view::npos) {
      out.push_back({Token::Type::Symbol, std::string(1, c), 0, start});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }
  out.push_back({Token::Type::End, "", 0, src.size()});
  return out;
}

bool is_keyword(const std::string& s) {
  return s == "and" || s == "or" || s == "not" || s == "forall" || s == "exists" ||
         s == "mod" || s == "true" || s == "false";
}

ExprPtr make(Expr::Kind kind, std::vector<ExprPtr> args = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = kind;
  e->args = std::move(args);
  return e;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : tokens_(tokenize(src)) {}

  PredicateSpec parse_definition() {
    const Token& head = expect_ident("predicate name");
    std::string name = head.text;
    expect_symbol("(");
    if (!peek_symbol(")")) {
      do {
        const Token& p = expect_ident("parameter name");
        if (std::find(params_.begin(), params_.end(), p.text) != params_.end()) {
          throw ParseError("duplicate parameter '" + p.text + "'", p.pos);
        }
        params_.push_back(p.text);
      } while (accept_symbol(","));
    }
    expect_symbol(")");
    expect_symbol(":=");
    for (std::size_t i = 0; i < params_.size(); ++i) scope_.push_back({params_[i], i});
    ExprPtr body = formula();
    if (cur().type != Token::Type::End) throw ParseError("unexpected '" + cur().text + "'", cur().pos);
    return PredicateSpec(name, params_, body, params_.size() + max_depth_);
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  bool peek_symbol(std::string_view s) const {
    return cur().type == Token::Type::Symbol && cur().text == s;
  }
  bool peek_word(std::string_view s) const {
    return cur().type == Token::Type::Ident && cur().text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (!peek_symbol(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_word(std::string_view s) {
    if (!peek_word(s)) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s)) {
      throw ParseError("expected '" + std::string(s) + "', found '" + describe(cur()) + "'",
                       cur().pos);
    }
  }
  const Token& expect_ident(const char* what) {
    if (cur().type != Token::Type::Ident || is_keyword(cur().text)) {
      throw ParseError(std::string("expected ") + what + ", found '" + describe(cur()) + "'",
                       cur().pos);
    }
    return tokens_[pos_++];
  }
  static std::string describe(const Token& t) {
    return t.type == Token::Type::End ? "end of input" : t.text;
  }

  ExprPtr formula() {
    ExprPtr lhs = conjunction();
    while (accept_word("or")) lhs = make(Expr::Kind::Or, {lhs, conjunction()});
    return lhs;
  }

  ExprPtr conjunction() {
    ExprPtr lhs = negation();
    while (accept_word("and")) lhs = make(Expr::Kind::And, {lhs, negation()});
    return lhs;
  }

  ExprPtr negation() {
    if (accept_word("not")) return make(Expr::Kind::Not, {negation()});
    if (peek_word("forall") || peek_word("exists")) return quantifier();
    return atom();
  }

  // forall v < t . body   -- the body extends as far right as possible.
  ExprPtr quantifier() {
    const bool universal = cur().text == "forall";
    ++pos_;
    const Token& var = expect_ident("bound variable");
    expect_symbol("<");
    ExprPtr bound = term();
    expect_symbol(".");
    const std::size_t slot = params_.size() + depth_;
    ++depth_;
    max_depth_ = std::max(max_depth_, depth_);
    scope_.push_back({var.text, slot});
    ExprPtr body = formula();
    scope_.pop_back();
    --depth_;
    auto e = std::make_shared<Expr>();
    e->kind = universal ? Expr::Kind::Forall : Expr::Kind::Exists;
    e->slot = slot;
    e->name = var.text;
    e->args = {bound, body};
    return e;
  }

  ExprPtr atom() {
    if (accept_word("true")) return make(Expr::Kind::True);
    if (accept_word("false")) return make(Expr::Kind::False);
    if (peek_symbol("(")) {
      // Either a parenthesised formula or a comparison whose left term starts
      // with a parenthesis. Try the comparison first.
      const std::size_t save = pos_;
      try {
        return comparison();
      } catch (const ParseError&) {
        pos_ = save;
      }
      expect_symbol("(");
      ExprPtr inner = formula();
      expect_symbol(")");
      return inner;
    }
    return comparison();
  }

  ExprPtr comparison() {
    ExprPtr lhs = term();
    static const std::pair<std::string_view, Expr::Kind> ops[] = {
        {"=", Expr::Kind::Eq},  {"!=", Expr::Kind::Ne}, {"<", Expr::Kind::Lt},
        {"<=", Expr::Kind::Le}, {">", Expr::Kind::Gt},  {">=", Expr::Kind::Ge}};
    for (auto [sym, kind] : ops) {
      if (accept_symbol(sym)) return make(kind, {lhs, term()});
    }
    throw ParseError("expected comparison operator, found '" + describe(cur()) + "'", cur().pos);
  }

  ExprPtr term() {
    ExprPtr lhs = product();
    while (accept_symbol("+")) lhs = make(Expr::Kind::Add, {lhs, product()});
    return lhs;
  }

  ExprPtr product() {
    ExprPtr lhs = factor();
    for (;;) {
      if (accept_symbol("*")) {
        lhs = make(Expr::Kind::Mul, {lhs, factor()});
      } else if (accept_word("mod")) {
        lhs = make(Expr::Kind::Mod, {lhs, factor()});
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    const Token& t = cur();
    if (t.type == Token::Type::Number) {
      ++pos_;
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Number;
      e->value = t.number;
      return e;
    }
    if (accept_symbol("(")) {
      ExprPtr inner = term();
      expect_symbol(")");
      return inner;
    }
    const Token& id = expect_ident("term");
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == id.text) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Variable;
        e->slot = it->second;
        e->name = id.text;
        return e;
      }
    }
    throw UnboundVariableError("unbound variable '" + id.text + "' at position " +
                               std::to_string(id.pos));
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::string> params_;
  std::vector<std::pair<std::string, std::size_t>> scope_;
  std::size_t depth_ = 0;
  std::size_t max_depth_ = 0;
};

Natural eval_term(const Expr& e, std::vector<Natural>& env);

bool eval_formula(const Expr& e, std::vector<Natural>& env) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::True: return true;
    case K::False: return false;
    case K::Eq: return eval_term(*e.args[0], env) == eval_term(*e.args[1], env);
    case K::Ne: return eval_term(*e.args[0], env) != eval_term(*e.args[1], env);
    case K::Lt: return eval_term(*e.args[0], env) < eval_term(*e.args[1], env);
    case K::Le: return eval_term(*e.args[0], env) <= eval_term(*e.args[1], env);
    case K::Gt: return eval_term(*e.args[0], env) > eval_term(*e.args[1], env);
    case K::Ge: return eval_term(*e.args[0], env) >= eval_term(*e.args[1], env);
    case K::And: return eval_formula(*e.args[0], env) && eval_formula(*e.args[1], env);
    case K::Or: return eval_formula(*e.args[0], env) || eval_formula(*e.args[1], env);
    case K::Not: return !eval_formula(*e.args[0], env);
    case K::Forall:
    case K::Exists: {
      const Natural bound = eval_term(*e.args[0], env);
      const bool universal = e.kind == K::Forall;
      for (Natural v = 0; v < bound; ++v) {
        env[e.slot] = v;
        if (eval_formula(*e.args[1], env) != universal) return !universal;
      }
      return universal;
    }
    default: throw Error("term used as formula");
  }
}

Natural eval_term(const Expr& e, std::vector<Natural>& env) {
  using K = Expr::Kind;
  switch (e.kind) {
    case K::Number: return e.value;
    case K::Variable: return env[e.slot];
    case K::Add: return eval_term(*e.args[0], env) + eval_term(*e.args[1], env);
    case K::Mul: return eval_term(*e.args[0], env) * eval_term(*e.args[1], env);
    case K::Mod: {
      const Natural a = eval_term(*e.args[0], env);
      const Natural b = eval_term(*e.args[1], env);
      return b == 0 ? a : a % b;  // x mod 0 = x keeps evaluation total
    }
    default: throw Error("formula used as term");
  }
}

int precedence(Expr::Kind k) {
  using K = Expr::Kind;
  switch (k) {
    case K::Or: return 1;
    case K::And: return 2;
    case K::Not: return 3;
    case K::Forall: case K::Exists: return 0;
    case K::Add: return 5;
    case K::Mul: case K::Mod: return 6;
    default: return 7;
  }
}

std::string render_expr(const Expr& e) {
  using K = Expr::Kind;
  auto wrap = [](const Expr& child, int min_prec) {
    std::string s = render_expr(child);
    return precedence(child.kind) < min_prec ? "(" + s + ")" : s;
  };
  switch (e.kind) {
    case K::Number: return std::to_string(e.value);
    case K::Variable: return e.name;
    case K::True: return "true";
    case K::False: return "false";
    case K::Add: return wrap(*e.args[0], 5) + " + " + wrap(*e.args[1], 6);
    case K::Mul: return wrap(*e.args[0], 6) + " * " + wrap(*e.args[1], 7);
    case K::Mod: return wrap(*e.args[0], 6) + " mod " + wrap(*e.args[1], 7);
    case K::Eq: return render_expr(*e.args[0]) + " = " + render_expr(*e.args[1]);
    case K::Ne: return render_expr(*e.args[0]) + " != " + render_expr(*e.args[1]);
    case K::Lt: return render_expr(*e.args[0]) + " < " + render_expr(*e.args[1]);
    case K::Le: return render_expr(*e.args[0]) + " <= " + render_expr(*e.args[1]);
    case K::Gt: return render_expr(*e.args[0]) + " > " + render_expr(*e.args[1]);
    case K::Ge: return render_expr(*e.args[0]) + " >= " + render_expr(*e.args[1]);
    case K::Or: return wrap(*e.args[0], 1) + " or " + wrap(*e.args[1], 2);
    case K::And: return wrap(*e.args[0], 2) + " and " + wrap(*e.args[1], 3);
    case K::Not: return "not " + wrap(*e.args[0], 3);
    case K::Forall:
    case K::Exists:
      return std::string(e.kind == K::Forall ? "(forall " : "(exists ") + e.name + " < " +
             render_expr(*e.args[0]) + ". " + render_expr(*e.args[1]) + ")";
  }
  return {};
}

}  // namespace

bool PredicateSpec::operator()(std::span<const Natural> args) const {
  if (args.size() != parameters_.size()) {
    throw ArityError(name_ + " expects " + std::to_string(parameters_.size()) +
                     " arguments, got " + std::to_string(args.size()));
  }
  std::vector<Natural> env(slots_, 0);
  std::copy(args.begin(), args.end(), env.begin());
  return eval_formula(*body_, env);
}

std::string PredicateSpec::render() const {
  std::string out = name_ + "(";
  for (std::size_t i = 0; i < parameters_.size(); ++i) {
    if (i) out += ",";
    out += parameters_[i];
  }
  return out + ") := " + render_expr(*body_);
}

PredicateSpec parse_predicate(std::string_view text) { return Parser(text).parse_definition(); }

bool eval_predicate(const PredicateSpec& p, std::span<const Natural> args) { return p(args); }

}  // namespace cew
