#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tunevault/archive_store.hpp"

namespace tunevault {

enum class FilterOp { Eq, Neq, Lt, Le, Gt, Ge, Contains };

std::string_view to_string(FilterOp op);
std::optional<FilterOp> parse_filter_op(std::string_view s);

/// Typed filter literal. Literals are compared as data, never spliced into
/// any query text.
using Literal = std::variant<std::string, std::int64_t, double, bool>;

struct Filter {
  std::string column;
  FilterOp op = FilterOp::Eq;
  Literal literal;
};

enum class SortDirection { Asc, Desc };

struct SortKey {
  std::string column;
  SortDirection direction = SortDirection::Asc;
};

inline constexpr std::int64_t kDefaultQueryLimit = 100;
inline constexpr std::int64_t kMaxQueryLimit = 1000;

struct QuerySpec {
  std::string table;
  std::vector<Filter> filters;  // combined with AND
  std::optional<SortKey> sort;
  std::int64_t limit = kDefaultQueryLimit;
  std::int64_t offset = 0;
};

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<Row> rows;
  std::int64_t total_matching = 0;
};

/// Checks table, columns, operator applicability and literal types. Throws
/// UnknownTable, UnknownColumn, BadOperator, TypeMismatch or BadRequest
/// (limit/offset out of range). Nothing is coerced.
void validate(const QuerySpec& spec);

/// Filter, stable sort and paginate one whitelisted table.
class QueryEngine {
 public:
  explicit QueryEngine(const ArchiveStore& store) : store_(store) {}

  QueryResult execute(const QuerySpec& spec) const;
  static const TableSchema& describe(std::string_view table);

 private:
  const ArchiveStore& store_;
};

}  // namespace tunevault
