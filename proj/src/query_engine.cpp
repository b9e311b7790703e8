#include "tunevault/query_engine.hpp"

#include <algorithm>

#include "tunevault/error.hpp"

namespace tunevault {

std::string_view to_string(FilterOp op) {
  switch (op) {
    case FilterOp::Eq: return "eq";
    case FilterOp::Neq: return "neq";
    case FilterOp::Lt: return "lt";
    case FilterOp::Le: return "le";
    case FilterOp::Gt: return "gt";
    case FilterOp::Ge: return "ge";
    case FilterOp::Contains: return "contains";
  }
  return "?";
}

std::optional<FilterOp> parse_filter_op(std::string_view s) {
  for (auto op : {FilterOp::Eq, FilterOp::Neq, FilterOp::Lt, FilterOp::Le, FilterOp::Gt,
                  FilterOp::Ge, FilterOp::Contains}) {
    if (to_string(op) == s) return op;
  }
  return std::nullopt;
}

const TableSchema& QueryEngine::describe(std::string_view table) {
  const auto* schema = find_schema(table);
  if (!schema) throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(table) + "'");
  return *schema;
}

namespace {

const Column& column_of(const TableSchema& schema, std::string_view name) {
  const int i = schema.column_index(name);
  if (i < 0)
    throw Error(ErrorCode::UnknownColumn,
                "table '" + schema.table + "' has no column '" + std::string(name) + "'");
  return schema.columns[static_cast<std::size_t>(i)];
}

bool literal_fits(const Literal& lit, ColumnType type) {
  switch (type) {
    case ColumnType::Text: return std::holds_alternative<std::string>(lit);
    case ColumnType::Int:
    case ColumnType::Timestamp: return std::holds_alternative<std::int64_t>(lit);
    case ColumnType::Float:
      return std::holds_alternative<double>(lit) || std::holds_alternative<std::int64_t>(lit);
    case ColumnType::Bool: return std::holds_alternative<bool>(lit);
  }
  return false;
}

// -1, 0, 1; both operands are non-null and of the column's type.
int compare_cells(const Cell& a, const Cell& b) {
  auto three_way = [](const auto& x, const auto& y) { return x < y ? -1 : (y < x ? 1 : 0); };
  if (const auto* s = std::get_if<std::string>(&a)) return three_way(*s, std::get<std::string>(b));
  if (const auto* i = std::get_if<std::int64_t>(&a)) return three_way(*i, std::get<std::int64_t>(b));
  if (const auto* d = std::get_if<double>(&a)) return three_way(*d, std::get<double>(b));
  return three_way(std::get<bool>(a), std::get<bool>(b));
}

Cell literal_as_cell(const Literal& lit, ColumnType type) {
  if (type == ColumnType::Float) {
    if (const auto* i = std::get_if<std::int64_t>(&lit)) return static_cast<double>(*i);
  }
  return std::visit([](const auto& v) -> Cell { return v; }, lit);
}

struct CompiledFilter {
  std::size_t column;
  FilterOp op;
  Cell literal;

  bool matches(const Row& row) const {
    const Cell& cell = row[column];
    if (std::holds_alternative<std::monostate>(cell)) return false;
    if (op == FilterOp::Contains)
      return std::get<std::string>(cell).find(std::get<std::string>(literal)) != std::string::npos;
    const int c = compare_cells(cell, literal);
    switch (op) {
      case FilterOp::Eq: return c == 0;
      case FilterOp::Neq: return c != 0;
      case FilterOp::Lt: return c < 0;
      case FilterOp::Le: return c <= 0;
      case FilterOp::Gt: return c > 0;
      case FilterOp::Ge: return c >= 0;
      case FilterOp::Contains: break;
    }
    return false;
  }
};

}  // namespace

void validate(const QuerySpec& spec) {
  const auto& schema = QueryEngine::describe(spec.table);
  for (const auto& f : spec.filters) {
    const auto& col = column_of(schema, f.column);
    if (f.op == FilterOp::Contains && col.type != ColumnType::Text)
      throw Error(ErrorCode::BadOperator, "'contains' needs a text column; '" + f.column +
                                              "' is " + std::string(to_string(col.type)));
    const bool ordering = f.op == FilterOp::Lt || f.op == FilterOp::Le || f.op == FilterOp::Gt ||
                          f.op == FilterOp::Ge;
    if (ordering && col.type == ColumnType::Bool)
      throw Error(ErrorCode::BadOperator,
                  "'" + std::string(to_string(f.op)) + "' does not apply to bool column '" +
                      f.column + "'");
    if (!literal_fits(f.literal, col.type))
      throw Error(ErrorCode::TypeMismatch, "literal for '" + f.column + "' must be " +
                                               std::string(to_string(col.type)));
  }
  if (spec.sort) column_of(schema, spec.sort->column);
  if (spec.limit < 1 || spec.limit > kMaxQueryLimit)
    throw Error(ErrorCode::BadRequest,
                "limit must be between 1 and " + std::to_string(kMaxQueryLimit));
  if (spec.offset < 0) throw Error(ErrorCode::BadRequest, "offset must be >= 0");
}

QueryResult QueryEngine::execute(const QuerySpec& spec) const {
  validate(spec);
  const auto& schema = describe(spec.table);

  std::vector<CompiledFilter> filters;
  for (const auto& f : spec.filters) {
    const auto i = static_cast<std::size_t>(schema.column_index(f.column));
    filters.push_back({i, f.op, literal_as_cell(f.literal, schema.columns[i].type)});
  }

  std::vector<Row> matched;
  for (auto& row : store_.scan(spec.table)) {
    if (std::all_of(filters.begin(), filters.end(),
                    [&](const auto& f) { return f.matches(row); }))
      matched.push_back(std::move(row));
  }

  if (spec.sort) {
    const auto col = static_cast<std::size_t>(schema.column_index(spec.sort->column));
    const bool desc = spec.sort->direction == SortDirection::Desc;
    // NULL sorts before every value.
    std::stable_sort(matched.begin(), matched.end(), [&](const Row& a, const Row& b) {
      const bool an = std::holds_alternative<std::monostate>(a[col]);
      const bool bn = std::holds_alternative<std::monostate>(b[col]);
      int c;
      if (an || bn)
        c = an == bn ? 0 : (an ? -1 : 1);
      else
        c = compare_cells(a[col], b[col]);
      return desc ? c > 0 : c < 0;
    });
  }

  QueryResult result;
  for (const auto& c : schema.columns) result.columns.push_back(c.name);
  result.total_matching = static_cast<std::int64_t>(matched.size());
  const auto begin = std::min<std::size_t>(static_cast<std::size_t>(spec.offset), matched.size());
  const auto end = std::min<std::size_t>(begin + static_cast<std::size_t>(spec.limit), matched.size());
  result.rows.assign(std::make_move_iterator(matched.begin() + begin),
                     std::make_move_iterator(matched.begin() + end));
  return result;
}

}  // namespace tunevault
