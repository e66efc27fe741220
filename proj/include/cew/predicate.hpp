#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cew/core.hpp"

namespace cew {

/// Raised by parse_predicate. `position` is a byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class UnboundVariableError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

// Expression tree. Terms evaluate to naturals, formulas to 0/1.
struct Expr {
  enum class Kind {
    Number, Variable, Add, Mul, Mod,
    Eq, Ne, Lt, Le, Gt, Ge,
    And, Or, Not, True, False,
    Forall, Exists
  };
  Kind kind;
  Natural value = 0;          // Number
  std::size_t slot = 0;       // Variable, and the bound slot of a quantifier
  std::string name;           // Variable / bound variable name, for rendering
  std::vector<std::shared_ptr<const Expr>> args;  // quantifiers: {bound, body}
};

using ExprPtr = std::shared_ptr<const Expr>;

/// A bounded-quantifier arithmetic predicate, `Name(p1,...,pk) := body`.
/// Evaluation is total since every quantifier is bounded.
class PredicateSpec {
 public:
  PredicateSpec(std::string name, std::vector<std::string> parameters, ExprPtr body,
                std::size_t slots)
      : name_(std::move(name)), parameters_(std::move(parameters)), body_(std::move(body)),
        slots_(slots) {}

  const std::string& name() const { return name_; }
  const std::vector<std::string>& parameters() const { return parameters_; }
  std::size_t arity() const { return parameters_.size(); }
  const ExprPtr& body() const { return body_; }

  bool operator()(std::span<const Natural> args) const;
  bool operator()(std::initializer_list<Natural> args) const {
    return (*this)(std::span<const Natural>(args.begin(), args.size()));
  }

  /// Source text that parses back to an equivalent predicate.
  std::string render() const;

 private:
  std::string name_;
  std::vector<std::string> parameters_;
  ExprPtr body_;
  std::size_t slots_;  // parameters + nested bound variables
};

PredicateSpec parse_predicate(std::string_view text);

bool eval_predicate(const PredicateSpec& p, std::span<const Natural> args);

}  // namespace cew
