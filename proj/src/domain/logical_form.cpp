#include "dpp/domain/logical_form.hpp"

#include <stdexcept>

namespace dpp {

std::string_view to_string(Comparator cmp) {
  switch (cmp) {
    case Comparator::Eq: return "=";
    case Comparator::Ge: return ">=";
    case Comparator::Le: return "<=";
  }
  return "?";
}

LogicalForm LogicalForm::type(std::string name) {
  LogicalForm lf;
  lf.kind = LfKind::Type;
  lf.head = std::move(name);
  return lf;
}

LogicalForm LogicalForm::filter(LogicalForm set, std::string attr, Comparator cmp, std::string value) {
  LogicalForm lf;
  lf.kind = LfKind::Filter;
  lf.head = std::move(attr);
  lf.cmp = cmp;
  lf.value = std::move(value);
  lf.args.push_back(std::move(set));
  return lf;
}

LogicalForm LogicalForm::superlative(std::string attr, bool maximize, LogicalForm set) {
  LogicalForm lf;
  lf.kind = LfKind::Superlative;
  lf.head = std::move(attr);
  lf.maximize = maximize;
  lf.args.push_back(std::move(set));
  return lf;
}

LogicalForm LogicalForm::count(LogicalForm set) {
  LogicalForm lf;
  lf.kind = LfKind::Count;
  lf.args.push_back(std::move(set));
  return lf;
}

LogicalForm LogicalForm::conj(LogicalForm a, LogicalForm b) {
  LogicalForm lf;
  lf.kind = LfKind::And;
  lf.args.push_back(std::move(a));
  lf.args.push_back(std::move(b));
  return lf;
}

namespace {

void emit(const LogicalForm& lf, std::vector<std::string>& out) {
  out.emplace_back("(");
  switch (lf.kind) {
    case LfKind::Type:
      out.emplace_back("type");
      out.push_back(lf.head);
      break;
    case LfKind::Filter:
      out.emplace_back("filter");
      emit(lf.args.at(0), out);
      out.emplace_back("(");
      out.emplace_back(to_string(lf.cmp));
      out.push_back(lf.head);
      out.push_back(lf.value);
      out.emplace_back(")");
      break;
    case LfKind::Superlative:
      out.emplace_back("superlative");
      out.push_back(lf.head);
      out.emplace_back(lf.maximize ? "max" : "min");
      emit(lf.args.at(0), out);
      break;
    case LfKind::Count:
      out.emplace_back("count");
      emit(lf.args.at(0), out);
      break;
    case LfKind::And:
      out.emplace_back("and");
      emit(lf.args.at(0), out);
      emit(lf.args.at(1), out);
      break;
  }
  out.emplace_back(")");
}

class Parser {
 public:
  explicit Parser(const std::vector<std::string>& toks) : toks_(toks) {}

  LogicalForm parse_all() {
    LogicalForm lf = expr();
    if (pos_ != toks_.size()) fail("trailing tokens");
    return lf;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("logical form parse error at token " + std::to_string(pos_) + ": " + what);
  }
  const std::string& next() {
    if (pos_ >= toks_.size()) fail("unexpected end of input");
    return toks_[pos_++];
  }
  void expect(std::string_view tok) {
    if (next() != tok) fail("expected '" + std::string(tok) + "'");
  }
  static bool is_atom(const std::string& t) { return t != "(" && t != ")"; }
  std::string atom() {
    const std::string& t = next();
    if (!is_atom(t)) fail("expected an atom");
    return t;
  }

  LogicalForm expr() {
    expect("(");
    const std::string head = atom();
    LogicalForm lf;
    if (head == "type") {
      lf = LogicalForm::type(atom());
    } else if (head == "filter") {
      LogicalForm set = expr();
      expect("(");
      const std::string op = atom();
      Comparator cmp;
      if (op == "=") cmp = Comparator::Eq;
      else if (op == ">=") cmp = Comparator::Ge;
      else if (op == "<=") cmp = Comparator::Le;
      else fail("unknown comparator '" + op + "'");
      std::string attr = atom();
      std::string value = atom();
      expect(")");
      lf = LogicalForm::filter(std::move(set), std::move(attr), cmp, std::move(value));
    } else if (head == "superlative") {
      std::string attr = atom();
      const std::string dir = atom();
      if (dir != "max" && dir != "min") fail("superlative direction must be max or min");
      lf = LogicalForm::superlative(std::move(attr), dir == "max", expr());
    } else if (head == "count") {
      lf = LogicalForm::count(expr());
    } else if (head == "and") {
      LogicalForm a = expr();
      lf = LogicalForm::conj(std::move(a), expr());
    } else {
      fail("unknown operator '" + head + "'");
    }
    expect(")");
    return lf;
  }

  const std::vector<std::string>& toks_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> LogicalForm::tokens() const {
  std::vector<std::string> out;
  emit(*this, out);
  return out;
}

std::string LogicalForm::serialize() const {
  std::string s;
  const auto toks = tokens();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const bool close = toks[i] == ")";
    const bool after_open = i > 0 && toks[i - 1] == "(";
    if (i > 0 && !close && !after_open) s += ' ';
    s += toks[i];
  }
  return s;
}

std::vector<std::string> lf_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char c : text) {
    if (c == '(' || c == ')') {
      flush();
      out.emplace_back(1, c);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      flush();
    } else {
      cur += c;
    }
  }
  flush();
  return out;
}

LogicalForm LogicalForm::parse(std::string_view text) { return parse(lf_tokenize(text)); }

LogicalForm LogicalForm::parse(const std::vector<std::string>& tokens) {
  return Parser(tokens).parse_all();
}

std::optional<LogicalForm> LogicalForm::try_parse(const std::vector<std::string>& tokens) {
  try {
    return parse(tokens);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

}  // namespace dpp
