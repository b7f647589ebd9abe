#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "dpp/domain/logical_form.hpp"

namespace dpp {

enum class ValueKind { Integer, EntityRef, String };

struct AttributeSchema {
  std::string domain_type;  // entity type carrying the attribute
  ValueKind range = ValueKind::Integer;
  std::string range_type;   // referenced entity type for EntityRef
};

using AttrValue = std::variant<std::int64_t, std::string>;

struct Entity {
  std::string id;
  std::string type;
  std::map<std::string, AttrValue> attributes;
};

/// In-memory entity store. Construction validates id uniqueness, schema
/// closure and reference integrity.
class Database {
 public:
  Database(std::vector<Entity> entities, std::map<std::string, AttributeSchema> schema);

  // The bundled basketball fixture (4 teams, 16 players).
  static Database basketball();

  const std::vector<Entity>& entities() const { return entities_; }
  const std::map<std::string, AttributeSchema>& schema() const { return schema_; }
  const Entity* find(const std::string& id) const;
  std::vector<std::string> types() const;

 private:
  std::vector<Entity> entities_;
  std::map<std::string, AttributeSchema> schema_;
  std::map<std::string, std::size_t> by_id_;
};

struct ExecError {
  std::string message;
  std::string node;  // serialized failing subtree
  friend bool operator==(const ExecError&, const ExecError&) = default;
};

/// Result of executing a logical form: a sorted entity-id set, an integer, or
/// an error value.
class Denotation {
 public:
  using EntitySet = std::vector<std::string>;

  Denotation(EntitySet set) : value_(std::move(set)) {}
  Denotation(std::int64_t n) : value_(n) {}
  Denotation(ExecError e) : value_(std::move(e)) {}

  bool is_error() const { return std::holds_alternative<ExecError>(value_); }
  bool is_set() const { return std::holds_alternative<EntitySet>(value_); }
  bool is_number() const { return std::holds_alternative<std::int64_t>(value_); }
  const EntitySet& set() const { return std::get<EntitySet>(value_); }
  std::int64_t number() const { return std::get<std::int64_t>(value_); }
  const ExecError& error() const { return std::get<ExecError>(value_); }

  // Set equality for entity sets, exact equality for numbers; errors never match.
  bool matches(const Denotation& other) const;
  std::string to_string() const;

  friend bool operator==(const Denotation&, const Denotation&) = default;

 private:
  std::variant<EntitySet, std::int64_t, ExecError> value_;
};

Denotation execute(const LogicalForm& lf, const Database& db);

}  // namespace dpp
