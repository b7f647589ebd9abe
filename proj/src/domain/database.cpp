#include "dpp/domain/database.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "dpp/error.hpp"

namespace dpp {

Database::Database(std::vector<Entity> entities, std::map<std::string, AttributeSchema> schema)
    : entities_(std::move(entities)), schema_(std::move(schema)) {
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    if (!by_id_.emplace(entities_[i].id, i).second)
      throw ConfigError("duplicate entity id: " + entities_[i].id);
  }
  for (const auto& e : entities_) {
    for (const auto& [attr, value] : e.attributes) {
      auto it = schema_.find(attr);
      if (it == schema_.end()) throw ConfigError("entity " + e.id + " has attribute outside schema: " + attr);
      const AttributeSchema& s = it->second;
      if (s.domain_type != e.type)
        throw ConfigError("attribute " + attr + " not defined for type " + e.type);
      if (s.range == ValueKind::Integer && !std::holds_alternative<std::int64_t>(value))
        throw ConfigError("attribute " + attr + " of " + e.id + " must be an integer");
      if (s.range != ValueKind::Integer && !std::holds_alternative<std::string>(value))
        throw ConfigError("attribute " + attr + " of " + e.id + " must be a string");
      if (s.range == ValueKind::EntityRef) {
        const Entity* target = find(std::get<std::string>(value));
        if (target == nullptr || target->type != s.range_type)
          throw ConfigError("attribute " + attr + " of " + e.id + " references unknown entity");
      }
    }
  }
}

const Entity* Database::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &entities_[it->second];
}

std::vector<std::string> Database::types() const {
  std::set<std::string> t;
  for (const auto& e : entities_) t.insert(e.type);
  return {t.begin(), t.end()};
}

Database Database::basketball() {
  std::map<std::string, AttributeSchema> schema = {
      {"num_steals", {"player", ValueKind::Integer, ""}},
      {"num_points", {"player", ValueKind::Integer, ""}},
      {"num_assists", {"player", ValueKind::Integer, ""}},
      {"num_rebounds", {"player", ValueKind::Integer, ""}},
      {"position", {"player", ValueKind::String, ""}},
      {"plays_for", {"player", ValueKind::EntityRef, "team"}},
  };
  std::vector<Entity> es;
  for (const char* t : {"lakers", "celtics", "bulls", "heat"}) es.push_back({t, "team", {}});
  struct Row {
    const char* id;
    const char* team;
    const char* pos;
    int steals, points, assists, rebounds;
  };
  const Row rows[] = {
      {"kobe_bryant", "lakers", "guard", 3, 12, 5, 6},
      {"shaquille_oneal", "lakers", "center", 1, 10, 2, 12},
      {"derek_fisher", "lakers", "guard", 2, 5, 8, 3},
      {"lamar_odom", "lakers", "forward", 1, 8, 3, 8},
      {"paul_pierce", "celtics", "forward", 5, 12, 3, 5},
      {"ray_allen", "celtics", "guard", 2, 8, 3, 2},
      {"kevin_garnett", "celtics", "forward", 1, 10, 2, 10},
      {"rajon_rondo", "celtics", "guard", 8, 5, 12, 5},
      {"michael_jordan", "bulls", "guard", 12, 12, 5, 5},
      {"scottie_pippen", "bulls", "forward", 5, 8, 5, 8},
      {"dennis_rodman", "bulls", "forward", 1, 2, 1, 12},
      {"toni_kukoc", "bulls", "forward", 2, 5, 3, 3},
      {"dwyane_wade", "heat", "guard", 3, 10, 8, 5},
      {"lebron_james", "heat", "forward", 3, 12, 8, 8},
      {"chris_bosh", "heat", "center", 1, 8, 1, 8},
      {"udonis_haslem", "heat", "center", 2, 3, 1, 5},
  };
  for (const Row& r : rows) {
    Entity e{r.id, "player", {}};
    e.attributes["plays_for"] = std::string(r.team);
    e.attributes["position"] = std::string(r.pos);
    e.attributes["num_steals"] = std::int64_t{r.steals};
    e.attributes["num_points"] = std::int64_t{r.points};
    e.attributes["num_assists"] = std::int64_t{r.assists};
    e.attributes["num_rebounds"] = std::int64_t{r.rebounds};
    es.push_back(std::move(e));
  }
  return Database(std::move(es), std::move(schema));
}

bool Denotation::matches(const Denotation& other) const {
  if (is_error() || other.is_error()) return false;
  return value_ == other.value_;
}

std::string Denotation::to_string() const {
  if (is_number()) return std::to_string(number());
  if (is_error()) return "error: " + error().message;
  std::string s = "{";
  for (std::size_t i = 0; i < set().size(); ++i) {
    if (i) s += ", ";
    s += set()[i];
  }
  return s + "}";
}

namespace {

struct Failure {
  ExecError error;
};

[[noreturn]] void fail(const std::string& msg, const LogicalForm& node) {
  throw Failure{ExecError{msg, node.serialize()}};
}

const AttributeSchema& schema_of(const Database& db, const LogicalForm& node) {
  auto it = db.schema().find(node.head);
  if (it == db.schema().end()) fail("unknown attribute " + node.head, node);
  return it->second;
}

Denotation::EntitySet eval_set(const LogicalForm& lf, const Database& db, const char* context);

Denotation eval(const LogicalForm& lf, const Database& db) {
  switch (lf.kind) {
    case LfKind::Type: {
      Denotation::EntitySet out;
      bool known = false;
      for (const auto& e : db.entities()) {
        if (e.type != lf.head) continue;
        known = true;
        out.push_back(e.id);
      }
      if (!known) fail("unknown type " + lf.head, lf);
      std::sort(out.begin(), out.end());
      return out;
    }
    case LfKind::Filter: {
      const auto input = eval_set(lf.args.at(0), db, "filter over non-set");
      const AttributeSchema& s = schema_of(db, lf);
      std::int64_t threshold = 0;
      if (s.range == ValueKind::Integer) {
        try {
          std::size_t used = 0;
          threshold = std::stoll(lf.value, &used);
          if (used != lf.value.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          fail("non-numeric value for " + lf.head, lf);
        }
      } else if (lf.cmp != Comparator::Eq) {
        fail("ordering comparison on non-numeric attribute " + lf.head, lf);
      }
      Denotation::EntitySet out;
      for (const auto& id : input) {
        const Entity* e = db.find(id);
        auto it = e->attributes.find(lf.head);
        if (it == e->attributes.end()) fail("attribute " + lf.head + " undefined for " + e->type, lf);
        bool keep;
        if (s.range == ValueKind::Integer) {
          const auto v = std::get<std::int64_t>(it->second);
          keep = lf.cmp == Comparator::Eq ? v == threshold : lf.cmp == Comparator::Ge ? v >= threshold : v <= threshold;
        } else {
          keep = std::get<std::string>(it->second) == lf.value;
        }
        if (keep) out.push_back(id);
      }
      return out;
    }
    case LfKind::Superlative: {
      const auto input = eval_set(lf.args.at(0), db, "superlative over non-set");
      const AttributeSchema& s = schema_of(db, lf);
      if (s.range != ValueKind::Integer) fail("superlative over non-numeric attribute " + lf.head, lf);
      if (input.empty()) fail("superlative over empty set", lf);
      std::int64_t best = 0;
      bool first = true;
      for (const auto& id : input) {
        const Entity* e = db.find(id);
        auto it = e->attributes.find(lf.head);
        if (it == e->attributes.end()) fail("attribute " + lf.head + " undefined for " + e->type, lf);
        const auto v = std::get<std::int64_t>(it->second);
        if (first || (lf.maximize ? v > best : v < best)) best = v;
        first = false;
      }
      Denotation::EntitySet out;
      for (const auto& id : input)
        if (std::get<std::int64_t>(db.find(id)->attributes.at(lf.head)) == best) out.push_back(id);
      return out;
    }
    case LfKind::Count:
      return static_cast<std::int64_t>(eval_set(lf.args.at(0), db, "count over non-set").size());
    case LfKind::And: {
      const auto a = eval_set(lf.args.at(0), db, "and over non-set");
      const auto b = eval_set(lf.args.at(1), db, "and over non-set");
      Denotation::EntitySet out;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
      return out;
    }
  }
  fail("unknown node", lf);
}

Denotation::EntitySet eval_set(const LogicalForm& lf, const Database& db, const char* context) {
  Denotation d = eval(lf, db);
  if (!d.is_set()) fail(context, lf);
  return d.set();
}

}  // namespace

Denotation execute(const LogicalForm& lf, const Database& db) {
  try {
    return eval(lf, db);
  } catch (const Failure& f) {
    return f.error;
  }
}

}  // namespace dpp
