#include "tunevault/archive_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tunevault/error.hpp"

namespace tunevault {

using ojson = nlohmann::ordered_json;

std::string_view to_string(ColumnType t) {
  switch (t) {
    case ColumnType::Text: return "text";
    case ColumnType::Int: return "int";
    case ColumnType::Float: return "float";
    case ColumnType::Timestamp: return "timestamp";
    case ColumnType::Bool: return "bool";
  }
  return "?";
}

std::string_view to_string(SnapshotTrigger t) {
  return t == SnapshotTrigger::Scheduled ? "scheduled" : "manual";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::Scheduled ? "scheduled" : "manual";
}

int TableSchema::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == column) return static_cast<int>(i);
  return -1;
}

const std::vector<TableSchema>& table_schemas() {
  using T = ColumnType;
  static const std::vector<TableSchema> schemas = {
      {"resonators",
       {{"id", T::Int}, {"device_id", T::Text}, {"crate", T::Int}, {"slot", T::Int},
        {"nominal_amplitude", T::Float}, {"status", T::Text}}},
      {"beam_measurement",
       {{"id", T::Int}, {"taken_at", T::Timestamp}, {"target_line", T::Int},
        {"current_enA", T::Float}, {"transmission", T::Float}}},
      {"cryo_alarms",
       {{"id", T::Int}, {"raised_at", T::Timestamp}, {"sensor", T::Text},
        {"temperature_k", T::Float}, {"threshold_k", T::Float}}},
      {"camac_crates", {{"id", T::Int}, {"crate", T::Int}, {"n_modules", T::Int}}},
      {"camac_modules",
       {{"id", T::Int}, {"crate", T::Int}, {"slot", T::Int}, {"device_id", T::Text},
        {"device_class", T::Text}}},
      {"stepper_presets",
       {{"id", T::Int}, {"device_id", T::Text}, {"preset_name", T::Text},
        {"position_steps", T::Int}}},
      {"snapshots",
       {{"id", T::Int}, {"taken_at", T::Timestamp}, {"trigger", T::Text},
        {"store_version", T::Int}, {"n_values", T::Int}}},
      {"snapshot_values",
       {{"id", T::Int}, {"snapshot_id", T::Int}, {"channel", T::Text},
        {"value_float", T::Float, true}, {"value_int", T::Int, true},
        {"value_text", T::Text, true}, {"seq", T::Int}}},
      {"tunes",
       {{"id", T::Int}, {"label", T::Text}, {"created_at", T::Timestamp}, {"provenance", T::Text},
        {"mass_amu", T::Float}, {"charge_state", T::Int}, {"energy_mev_u", T::Float}}},
      {"tune_values",
       {{"id", T::Int}, {"tune_id", T::Int}, {"channel", T::Text}, {"scaling_law", T::Text},
        {"value_float", T::Float}}},
  };
  return schemas;
}

const TableSchema* find_schema(std::string_view table) {
  for (const auto& s : table_schemas())
    if (s.table == table) return &s;
  return nullptr;
}

namespace {

bool cell_matches(const Cell& c, const Column& col) {
  if (std::holds_alternative<std::monostate>(c)) return col.nullable;
  switch (col.type) {
    case ColumnType::Text: return std::holds_alternative<std::string>(c);
    case ColumnType::Int:
    case ColumnType::Timestamp: return std::holds_alternative<std::int64_t>(c);
    case ColumnType::Float: {
      const auto* d = std::get_if<double>(&c);
      return d && std::isfinite(*d);
    }
    case ColumnType::Bool: return std::holds_alternative<bool>(c);
  }
  return false;
}

void check_row(const TableSchema& schema, const Row& row, bool id_assigned) {
  if (row.size() != schema.columns.size())
    throw Error(ErrorCode::SchemaMismatch,
                schema.table + " rows have " + std::to_string(schema.columns.size()) +
                    " columns, got " + std::to_string(row.size()));
  for (std::size_t i = id_assigned ? 0 : 1; i < row.size(); ++i) {
    if (!cell_matches(row[i], schema.columns[i]))
      throw Error(ErrorCode::SchemaMismatch, schema.table + "." + schema.columns[i].name +
                                                 " expects " +
                                                 std::string(to_string(schema.columns[i].type)));
  }
}

std::string encode_record(const TableSchema& schema, const Row& row) {
  ojson j = ojson::object();
  for (std::size_t i = 0; i < row.size(); ++i) {
    const auto& name = schema.columns[i].name;
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, std::monostate>)
            j[name] = nullptr;
          else
            j[name] = v;
        },
        row[i]);
  }
  return j.dump() + "\n";
}

// Returns nullopt for anything that does not match the schema exactly.
std::optional<Row> decode_record(const TableSchema& schema, std::string_view line) {
  auto j = ojson::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || j.size() != schema.columns.size()) return std::nullopt;
  Row row;
  row.reserve(schema.columns.size());
  for (const auto& col : schema.columns) {
    auto it = j.find(col.name);
    if (it == j.end()) return std::nullopt;
    const auto& v = *it;
    if (v.is_null()) {
      if (!col.nullable) return std::nullopt;
      row.emplace_back(std::monostate{});
      continue;
    }
    switch (col.type) {
      case ColumnType::Text:
        if (!v.is_string()) return std::nullopt;
        row.emplace_back(v.get<std::string>());
        break;
      case ColumnType::Int:
      case ColumnType::Timestamp:
        if (!v.is_number_integer()) return std::nullopt;
        row.emplace_back(v.get<std::int64_t>());
        break;
      case ColumnType::Float:
        if (!v.is_number()) return std::nullopt;
        row.emplace_back(v.get<double>());
        break;
      case ColumnType::Bool:
        if (!v.is_boolean()) return std::nullopt;
        row.emplace_back(v.get<bool>());
        break;
    }
  }
  if (!std::holds_alternative<std::int64_t>(row[0])) return std::nullopt;
  return row;
}

[[noreturn]] void storage_failure(const std::string& what) {
  throw Error(ErrorCode::StorageFailure, what + ": " + std::strerror(errno));
}

std::int64_t int_at(const Row& r, std::size_t i) { return std::get<std::int64_t>(r[i]); }
double float_at(const Row& r, std::size_t i) { return std::get<double>(r[i]); }
const std::string& text_at(const Row& r, std::size_t i) { return std::get<std::string>(r[i]); }

}  // namespace

struct ArchiveStore::Table {
  const TableSchema* schema = nullptr;
  std::filesystem::path log;
  std::filesystem::path idx;
  int fd = -1;
  int idx_fd = -1;
  std::uint64_t size = 0;
  std::vector<Row> rows;
  std::vector<std::uint64_t> offsets;
  std::map<std::int64_t, std::size_t> by_id;
  std::int64_t next_id = 1;
  // parent id -> row positions, for child tables
  std::multimap<std::int64_t, std::size_t> by_parent;
  int fk_column = -1;

  void add(Row row, std::uint64_t offset) {
    const auto id = int_at(row, 0);
    by_id[id] = rows.size();
    if (fk_column >= 0) by_parent.emplace(int_at(row, fk_column), rows.size());
    next_id = std::max(next_id, id + 1);
    offsets.push_back(offset);
    rows.push_back(std::move(row));
  }

  void clear() {
    rows.clear();
    offsets.clear();
    by_id.clear();
    by_parent.clear();
    next_id = 1;
  }
};

ArchiveStore::ArchiveStore(std::filesystem::path data_dir, StoreOptions options)
    : data_dir_(std::move(data_dir)), options_(options) {
  std::error_code ec;
  std::filesystem::create_directories(data_dir_ / "tables", ec);
  if (ec)
    throw Error(ErrorCode::StorageFailure,
                "cannot create " + (data_dir_ / "tables").string() + ": " + ec.message());
  for (const auto& schema : table_schemas()) {
    auto t = std::make_unique<Table>();
    t->schema = &schema;
    t->log = log_path(schema.table);
    t->idx = index_path(schema.table);
    if (schema.table == "snapshot_values") t->fk_column = schema.column_index("snapshot_id");
    if (schema.table == "tune_values") t->fk_column = schema.column_index("tune_id");
    open_table(*t);
    tables_.emplace(schema.table, std::move(t));
  }
  drop_orphans("snapshots", "snapshot_values", "snapshot_id");
  drop_orphans("tunes", "tune_values", "tune_id");
  for (auto& [_, t] : tables_) write_index(*t);
  for (const auto& r : table_for("snapshots").rows)
    last_snapshot_at_ = std::max(last_snapshot_at_, int_at(r, 1));
}

ArchiveStore::~ArchiveStore() {
  for (auto& [_, t] : tables_) {
    if (t->fd >= 0) ::close(t->fd);
    if (t->idx_fd >= 0) ::close(t->idx_fd);
  }
}

std::filesystem::path ArchiveStore::log_path(std::string_view table) const {
  return data_dir_ / "tables" / (std::string(table) + ".log");
}

std::filesystem::path ArchiveStore::index_path(std::string_view table) const {
  return data_dir_ / "tables" / (std::string(table) + ".idx");
}

ArchiveStore::Table& ArchiveStore::table_for(std::string_view name) {
  auto it = tables_.find(name);
  if (it == tables_.end())
    throw Error(ErrorCode::UnknownTable, "unknown table '" + std::string(name) + "'");
  return *it->second;
}

const ArchiveStore::Table& ArchiveStore::table_for(std::string_view name) const {
  return const_cast<ArchiveStore*>(this)->table_for(name);
}

void ArchiveStore::open_table(Table& t) {
  std::string content;
  {
    std::ifstream in(t.log, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      content = ss.str();
    }
  }
  // Keep every complete, well-formed record; the first torn or corrupt line
  // marks the end of the durable log.
  std::uint64_t good_end = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    auto row = decode_record(*t.schema, std::string_view(content).substr(pos, nl - pos));
    if (!row || t.by_id.contains(int_at(*row, 0))) break;
    t.add(std::move(*row), pos);
    pos = nl + 1;
    good_end = pos;
  }

  t.fd = ::open(t.log.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (t.fd < 0) storage_failure("open " + t.log.string());
  if (good_end != content.size()) {
    if (::ftruncate(t.fd, static_cast<off_t>(good_end)) != 0)
      storage_failure("truncate " + t.log.string());
    ::fsync(t.fd);
  }
  t.size = good_end;
}

void ArchiveStore::drop_orphans(std::string_view parent, std::string_view child,
                                std::string_view fk) {
  const Table& p = table_for(parent);
  Table& c = table_for(child);
  const auto fk_col = static_cast<std::size_t>(c.schema->column_index(fk));
  std::vector<Row> kept;
  bool dropped = false;
  for (const auto& r : c.rows) {
    if (p.by_id.contains(int_at(r, fk_col)))
      kept.push_back(r);
    else
      dropped = true;
  }
  if (dropped) rewrite_table(c, kept);
}

void ArchiveStore::rewrite_table(Table& t, const std::vector<Row>& rows) {
  const auto tmp = t.log.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& r : rows) out << encode_record(*t.schema, r);
    out.flush();
    if (!out) storage_failure("rewrite " + tmp);
  }
  int tfd = ::open(tmp.c_str(), O_RDONLY | O_CLOEXEC);
  if (tfd >= 0) {
    ::fsync(tfd);
    ::close(tfd);
  }
  if (::rename(tmp.c_str(), t.log.c_str()) != 0) storage_failure("rename " + tmp);
  int dfd = ::open(t.log.parent_path().c_str(), O_RDONLY | O_DIRECTORY | O_CLOEXEC);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
  ::close(t.fd);
  t.fd = -1;
  t.clear();
  open_table(t);
}

void ArchiveStore::write_index(const Table& t) {
  // The index is derived data: reuse it when it agrees with the log,
  // otherwise rebuild it from the recovered rows.
  std::string expected;
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    expected += std::to_string(int_at(t.rows[i], 0)) + " " + std::to_string(t.offsets[i]) + "\n";
  std::string existing;
  {
    std::ifstream in(t.idx, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      existing = ss.str();
    }
  }
  auto& self = const_cast<Table&>(t);
  if (existing != expected || !std::filesystem::exists(t.idx)) {
    std::ofstream out(t.idx, std::ios::binary | std::ios::trunc);
    out << expected;
  }
  if (self.idx_fd < 0) self.idx_fd = ::open(t.idx.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
}

void ArchiveStore::check_injected_failure(std::string_view table) {
  if (failure_injector_ && failure_injector_(table))
    throw Error(ErrorCode::StorageFailure, "injected failure writing " + std::string(table));
}

void ArchiveStore::fault(FaultPoint p) {
  if (fault_hook_) fault_hook_(p);
}

std::uint64_t ArchiveStore::append_locked(Table& t, std::int64_t id, const std::string& line,
                                          bool split_for_fault) {
  const auto offset = t.size;
  std::string_view rest(line);
  bool faulted = !split_for_fault;
  while (!rest.empty()) {
    auto chunk = faulted ? rest : rest.substr(0, rest.size() / 2);
    auto n = ::write(t.fd, chunk.data(), chunk.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      const int saved = errno;
      // Best effort; a torn tail is dropped on the next open anyway.
      [[maybe_unused]] int rc = ::ftruncate(t.fd, static_cast<off_t>(offset));
      errno = saved;
      storage_failure("append " + t.log.string());
    }
    rest.remove_prefix(static_cast<std::size_t>(n));
    if (!faulted) {
      faulted = true;
      fault(FaultPoint::MidParentRecord);
    }
  }
  t.size += line.size();
  if (t.idx_fd >= 0) {
    const auto entry = std::to_string(id) + " " + std::to_string(offset) + "\n";
    [[maybe_unused]] auto n = ::write(t.idx_fd, entry.data(), entry.size());
  }
  return offset;
}

void ArchiveStore::sync_locked(Table& t) {
  if (options_.sync && ::fdatasync(t.fd) != 0) storage_failure("sync " + t.log.string());
}

std::int64_t ArchiveStore::insert(std::string_view table, Row row) {
  Table& t = table_for(table);
  if (row.empty() || !std::holds_alternative<std::monostate>(row[0]))
    throw Error(ErrorCode::SchemaMismatch, "id is assigned by the store; pass NULL");
  check_row(*t.schema, row, false);

  std::lock_guard writer(writer_mutex_);
  check_injected_failure(table);
  const auto id = t.next_id;
  row[0] = id;
  const auto offset = append_locked(t, id, encode_record(*t.schema, row), false);
  sync_locked(t);
  std::unique_lock publish(data_mutex_);
  t.add(std::move(row), offset);
  return id;
}

std::vector<Row> ArchiveStore::scan(std::string_view table) const {
  const Table& t = table_for(table);
  std::shared_lock lock(data_mutex_);
  return t.rows;
}

std::optional<Row> ArchiveStore::get(std::string_view table, std::int64_t id) const {
  const Table& t = table_for(table);
  std::shared_lock lock(data_mutex_);
  auto it = t.by_id.find(id);
  if (it == t.by_id.end()) return std::nullopt;
  return t.rows[it->second];
}

std::size_t ArchiveStore::count(std::string_view table) const {
  const Table& t = table_for(table);
  std::shared_lock lock(data_mutex_);
  return t.rows.size();
}

std::int64_t ArchiveStore::persist_family_locked(Table& p, Row parent_row, Table& c,
                                                 std::vector<Row> children) {
  const int fk = c.fk_column;
  check_row(*p.schema, parent_row, false);
  for (auto& r : children) {
    r[fk] = std::int64_t{0};
    check_row(*c.schema, r, false);
  }
  check_injected_failure(c.schema->table);
  check_injected_failure(p.schema->table);

  const auto parent_id = p.next_id;
  auto child_id = c.next_id;
  std::vector<std::uint64_t> child_offsets;
  child_offsets.reserve(children.size());

  const auto child_size = c.size;
  const auto parent_size = p.size;
  std::uint64_t parent_offset = 0;
  try {
    fault(FaultPoint::BeforeChildren);
    for (auto& r : children) {
      r[0] = child_id;
      r[fk] = parent_id;
      child_offsets.push_back(append_locked(c, child_id, encode_record(*c.schema, r), false));
      ++child_id;
      fault(FaultPoint::AfterChild);
    }
    sync_locked(c);
    fault(FaultPoint::BeforeParent);
    parent_row[0] = parent_id;
    parent_offset = append_locked(p, parent_id, encode_record(*p.schema, parent_row),
                                  static_cast<bool>(fault_hook_));
    sync_locked(p);
    fault(FaultPoint::AfterParent);
  } catch (...) {
    // Drop whatever part of the family reached the logs so ids stay unique.
    for (auto [t, size] : {std::pair{&c, child_size}, std::pair{&p, parent_size}}) {
      if (::ftruncate(t->fd, static_cast<off_t>(size)) == 0) t->size = size;
    }
    throw;
  }

  std::unique_lock publish(data_mutex_);
  for (std::size_t i = 0; i < children.size(); ++i) c.add(std::move(children[i]), child_offsets[i]);
  p.add(std::move(parent_row), parent_offset);
  return parent_id;
}

std::int64_t ArchiveStore::persist_snapshot(const StoreSnapshot& snap, SnapshotTrigger trigger,
                                            std::int64_t taken_at) {
  std::vector<Row> children;
  children.reserve(snap.entries.size());
  for (const auto& [name, e] : snap.entries) {
    Row r(7);
    r[2] = name;
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, double>) r[3] = v;
          if constexpr (std::is_same_v<V, std::int64_t>) r[4] = v;
          if constexpr (std::is_same_v<V, std::string>) r[5] = v;
        },
        e.value);
    r[6] = static_cast<std::int64_t>(e.seq);
    children.push_back(std::move(r));
  }

  std::lock_guard writer(writer_mutex_);
  // Ids and taken_at increase together even when captures race.
  const auto stamp = std::max(taken_at, last_snapshot_at_);
  Row parent(5);
  parent[1] = stamp;
  parent[2] = std::string(to_string(trigger));
  parent[3] = static_cast<std::int64_t>(snap.version);
  parent[4] = static_cast<std::int64_t>(children.size());
  const auto id = persist_family_locked(table_for("snapshots"), std::move(parent),
                                        table_for("snapshot_values"), std::move(children));
  last_snapshot_at_ = stamp;
  return id;
}

SnapshotData ArchiveStore::load_snapshot(std::int64_t snapshot_id) const {
  const Table& p = table_for("snapshots");
  const Table& c = table_for("snapshot_values");
  std::shared_lock lock(data_mutex_);
  auto it = p.by_id.find(snapshot_id);
  if (it == p.by_id.end())
    throw Error(ErrorCode::UnknownSnapshot, "unknown snapshot " + std::to_string(snapshot_id));
  SnapshotData out;
  out.header = snapshot_from_row(p.rows[it->second]);
  auto [lo, hi] = c.by_parent.equal_range(snapshot_id);
  for (auto ci = lo; ci != hi; ++ci) out.values.push_back(snapshot_value_from_row(c.rows[ci->second]));
  std::sort(out.values.begin(), out.values.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<SnapshotRow> ArchiveStore::list_snapshots() const {
  const Table& p = table_for("snapshots");
  std::shared_lock lock(data_mutex_);
  std::vector<SnapshotRow> out;
  out.reserve(p.rows.size());
  for (const auto& r : p.rows) out.push_back(snapshot_from_row(r));
  return out;
}

std::int64_t ArchiveStore::persist_tune(TuneRow header, std::vector<TuneValueRow> values) {
  validate(header.beam);
  Row parent(7);
  parent[1] = header.label;
  parent[2] = header.created_at;
  parent[3] = std::string(to_string(header.provenance));
  parent[4] = header.beam.mass_amu;
  parent[5] = std::int64_t{header.beam.charge_state};
  parent[6] = header.beam.energy_mev_u;
  std::vector<Row> children;
  children.reserve(values.size());
  for (const auto& v : values) {
    Row r(5);
    r[2] = v.channel;
    r[3] = std::string(to_string(v.scaling_law));
    r[4] = v.value_float;
    children.push_back(std::move(r));
  }
  std::lock_guard writer(writer_mutex_);
  return persist_family_locked(table_for("tunes"), std::move(parent), table_for("tune_values"),
                               std::move(children));
}

TuneData ArchiveStore::load_tune(std::int64_t tune_id) const {
  const Table& p = table_for("tunes");
  const Table& c = table_for("tune_values");
  std::shared_lock lock(data_mutex_);
  auto it = p.by_id.find(tune_id);
  if (it == p.by_id.end())
    throw Error(ErrorCode::UnknownTune, "unknown tune " + std::to_string(tune_id));
  TuneData out;
  out.header = tune_from_row(p.rows[it->second]);
  auto [lo, hi] = c.by_parent.equal_range(tune_id);
  for (auto ci = lo; ci != hi; ++ci) out.values.push_back(tune_value_from_row(c.rows[ci->second]));
  std::sort(out.values.begin(), out.values.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

std::vector<TuneRow> ArchiveStore::list_tunes() const {
  const Table& p = table_for("tunes");
  std::shared_lock lock(data_mutex_);
  std::vector<TuneRow> out;
  out.reserve(p.rows.size());
  for (const auto& r : p.rows) out.push_back(tune_from_row(r));
  return out;
}

void ArchiveStore::set_fault_hook(std::function<void(FaultPoint)> hook) {
  std::lock_guard writer(writer_mutex_);
  fault_hook_ = std::move(hook);
}

void ArchiveStore::set_failure_injector(std::function<bool(std::string_view)> injector) {
  std::lock_guard writer(writer_mutex_);
  failure_injector_ = std::move(injector);
}

SnapshotRow snapshot_from_row(const Row& r) {
  SnapshotRow s;
  s.id = int_at(r, 0);
  s.taken_at = int_at(r, 1);
  s.trigger = text_at(r, 2) == "scheduled" ? SnapshotTrigger::Scheduled : SnapshotTrigger::Manual;
  s.store_version = int_at(r, 3);
  s.n_values = int_at(r, 4);
  return s;
}

SnapshotValueRow snapshot_value_from_row(const Row& r) {
  SnapshotValueRow v;
  v.id = int_at(r, 0);
  v.snapshot_id = int_at(r, 1);
  v.channel = text_at(r, 2);
  if (const auto* d = std::get_if<double>(&r[3])) v.value_float = *d;
  if (const auto* i = std::get_if<std::int64_t>(&r[4])) v.value_int = *i;
  if (const auto* s = std::get_if<std::string>(&r[5])) v.value_text = *s;
  v.seq = int_at(r, 6);
  return v;
}

TuneRow tune_from_row(const Row& r) {
  TuneRow t;
  t.id = int_at(r, 0);
  t.label = text_at(r, 1);
  t.created_at = int_at(r, 2);
  t.provenance = text_at(r, 3) == "scheduled" ? Provenance::Scheduled : Provenance::Manual;
  t.beam.mass_amu = float_at(r, 4);
  t.beam.charge_state = static_cast<int>(int_at(r, 5));
  t.beam.energy_mev_u = float_at(r, 6);
  return t;
}

TuneValueRow tune_value_from_row(const Row& r) {
  TuneValueRow v;
  v.id = int_at(r, 0);
  v.tune_id = int_at(r, 1);
  v.channel = text_at(r, 2);
  v.scaling_law = parse_scaling_law(text_at(r, 3)).value_or(ScalingLaw::None);
  v.value_float = float_at(r, 4);
  return v;
}

}  // namespace tunevault
