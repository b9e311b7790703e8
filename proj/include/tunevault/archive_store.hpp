#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tunevault/beam.hpp"
#include "tunevault/channel_db.hpp"

namespace tunevault {

enum class ColumnType { Text, Int, Float, Timestamp, Bool };

std::string_view to_string(ColumnType t);

struct Column {
  std::string name;
  ColumnType type = ColumnType::Text;
  bool nullable = false;
};

struct TableSchema {
  std::string table;
  std::vector<Column> columns;

  /// Position of `column`, or -1.
  int column_index(std::string_view column) const;
};

/// One table cell. monostate is SQL-style NULL; timestamps are Int ms.
using Cell = std::variant<std::monostate, std::string, std::int64_t, double, bool>;
/// Cells in schema order; cell 0 is always the integer `id`.
using Row = std::vector<Cell>;

/// Fixed table whitelist, in a stable order.
const std::vector<TableSchema>& table_schemas();
const TableSchema* find_schema(std::string_view table);

enum class SnapshotTrigger { Scheduled, Manual };
enum class Provenance { Manual, Scheduled };
std::string_view to_string(SnapshotTrigger t);
std::string_view to_string(Provenance p);

struct SnapshotRow {
  std::int64_t id = 0;
  std::int64_t taken_at = 0;
  SnapshotTrigger trigger = SnapshotTrigger::Manual;
  std::int64_t store_version = 0;
  std::int64_t n_values = 0;
};

struct SnapshotValueRow {
  std::int64_t id = 0;
  std::int64_t snapshot_id = 0;
  std::string channel;
  std::optional<double> value_float;
  std::optional<std::int64_t> value_int;
  std::optional<std::string> value_text;
  std::int64_t seq = 0;
};

struct TuneRow {
  std::int64_t id = 0;
  std::string label;
  std::int64_t created_at = 0;
  Provenance provenance = Provenance::Manual;
  BeamParameters beam;
};

struct TuneValueRow {
  std::int64_t id = 0;
  std::int64_t tune_id = 0;
  std::string channel;
  ScalingLaw scaling_law = ScalingLaw::None;
  double value_float = 0.0;
};

struct SnapshotData {
  SnapshotRow header;
  std::vector<SnapshotValueRow> values;
};

struct TuneData {
  TuneRow header;
  std::vector<TuneValueRow> values;
};

/// Crash-injection points inside one family write (children, then parent).
enum class FaultPoint { BeforeChildren, AfterChild, BeforeParent, MidParentRecord, AfterParent };

struct StoreOptions {
  /// fdatasync after every commit point.
  bool sync = true;
};

/// Durable relational store: one append-only record log per whitelisted
/// table under `<data_dir>/tables/`, newline-delimited JSON records whose
/// field names match the table schema, plus a sidecar `<table>.idx` mapping
/// id to byte offset.
///
/// Multi-row families (snapshot + values, tune + values) are written child
/// rows first, then the parent row as commit point; reopening drops children
/// whose parent never landed. All mutations are serialized through one
/// writer; readers only ever see committed rows.
class ArchiveStore {
 public:
  explicit ArchiveStore(std::filesystem::path data_dir, StoreOptions options = {});
  ~ArchiveStore();

  ArchiveStore(const ArchiveStore&) = delete;
  ArchiveStore& operator=(const ArchiveStore&) = delete;

  /// `row` must carry NULL in the id slot; the assigned id is returned.
  std::int64_t insert(std::string_view table, Row row);
  std::vector<Row> scan(std::string_view table) const;
  std::optional<Row> get(std::string_view table, std::int64_t id) const;
  std::size_t count(std::string_view table) const;

  std::int64_t persist_snapshot(const StoreSnapshot& snap, SnapshotTrigger trigger,
                                std::int64_t taken_at);
  SnapshotData load_snapshot(std::int64_t snapshot_id) const;
  std::vector<SnapshotRow> list_snapshots() const;

  /// `values` ids and tune_id are assigned by the store.
  std::int64_t persist_tune(TuneRow header, std::vector<TuneValueRow> values);
  TuneData load_tune(std::int64_t tune_id) const;
  std::vector<TuneRow> list_tunes() const;

  const std::filesystem::path& data_dir() const { return data_dir_; }
  std::filesystem::path log_path(std::string_view table) const;
  std::filesystem::path index_path(std::string_view table) const;

  /// Test hook invoked at each FaultPoint of a family write.
  void set_fault_hook(std::function<void(FaultPoint)> hook);
  /// Test hook: when it returns true for a table, the next write to it fails
  /// with StorageFailure before touching disk.
  void set_failure_injector(std::function<bool(std::string_view table)> injector);

 private:
  struct Table;

  Table& table_for(std::string_view name);
  const Table& table_for(std::string_view name) const;
  void open_table(Table& t);
  void drop_orphans(std::string_view parent, std::string_view child, std::string_view fk);
  void rewrite_table(Table& t, const std::vector<Row>& rows);
  void write_index(const Table& t);
  std::uint64_t append_locked(Table& t, std::int64_t id, const std::string& line,
                              bool split_for_fault);
  void sync_locked(Table& t);
  void check_injected_failure(std::string_view table);
  void fault(FaultPoint p);
  std::int64_t persist_family_locked(Table& parent, Row parent_row, Table& child,
                                     std::vector<Row> children);

  std::filesystem::path data_dir_;
  StoreOptions options_;
  std::map<std::string, std::unique_ptr<Table>, std::less<>> tables_;

  std::mutex writer_mutex_;
  mutable std::shared_mutex data_mutex_;
  std::function<void(FaultPoint)> fault_hook_;
  std::function<bool(std::string_view)> failure_injector_;
  std::int64_t last_snapshot_at_ = 0;
};

// Row <-> typed record conversions.
SnapshotRow snapshot_from_row(const Row& row);
SnapshotValueRow snapshot_value_from_row(const Row& row);
TuneRow tune_from_row(const Row& row);
TuneValueRow tune_value_from_row(const Row& row);

}  // namespace tunevault
