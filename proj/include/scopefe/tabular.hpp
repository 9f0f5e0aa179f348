#pragma once

#include "scopefe/common.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scopefe {

enum class ColumnKind { Numeric, Categorical };
enum class Task { Regression, Binary };

std::string to_string(ColumnKind kind);
std::string to_string(Task task);
ColumnKind parse_column_kind(const std::string& text);
Task parse_task(const std::string& text);

struct ColumnMeta {
    std::string name;
    ColumnKind kind = ColumnKind::Numeric;
    std::size_t index = 0;
};

/// Read-only view of one column over every dataset row.
struct ColumnView {
    ColumnKind kind = ColumnKind::Numeric;
    std::span<const double> numeric;
    std::span<const std::int32_t> codes;
    std::int32_t cardinality = 0;

    std::size_t size() const {
        return kind == ColumnKind::Numeric ? numeric.size() : codes.size();
    }
};

/// Owned column, used for materialized candidates.
struct Column {
    ColumnKind kind = ColumnKind::Numeric;
    std::vector<double> numeric;
    std::vector<std::int32_t> codes;
    std::int32_t cardinality = 0;
    /// Labels for categorical codes, when known.
    std::vector<std::string> dictionary;

    ColumnView view() const { return {kind, numeric, codes, cardinality}; }
    std::size_t size() const {
        return kind == ColumnKind::Numeric ? numeric.size() : codes.size();
    }
};

/// Column-typed table. Immutable once constructed.
class Dataset {
public:
    Dataset() = default;

    /// Builds a dataset from owned columns. Validates row counts, category
    /// codes and name uniqueness.
    Dataset(std::vector<std::string> names, std::vector<Column> columns,
            std::string target_name, std::vector<double> target, Task task);

    std::size_t num_rows() const { return target_.size(); }
    std::size_t num_features() const { return meta_.size(); }
    const std::vector<ColumnMeta>& columns() const { return meta_; }
    const ColumnMeta& column(std::size_t i) const { return meta_.at(i); }
    std::optional<std::size_t> find(const std::string& name) const;

    ColumnView view(std::size_t i) const { return data_.at(i).view(); }
    std::span<const double> numeric(std::size_t i) const;
    std::span<const std::int32_t> codes(std::size_t i) const;
    std::int32_t cardinality(std::size_t i) const { return data_.at(i).cardinality; }
    const std::vector<std::string>& dictionary(std::size_t i) const {
        return data_.at(i).dictionary;
    }

    const std::string& target_name() const { return target_name_; }
    /// Regression values, or 0/1 for Binary.
    const std::vector<double>& target() const { return target_; }
    Task task() const { return task_; }
    /// Original label text for classes 0 and 1 (Binary only).
    const std::vector<std::string>& class_labels() const { return class_labels_; }
    void set_class_labels(std::vector<std::string> labels) { class_labels_ = std::move(labels); }
    /// Position of the target among the source file's columns.
    std::size_t target_position() const { return target_position_; }
    void set_target_position(std::size_t pos) { target_position_ = pos; }

private:
    std::vector<ColumnMeta> meta_;
    std::vector<Column> data_;
    std::string target_name_;
    std::vector<double> target_;
    Task task_ = Task::Regression;
    std::vector<std::string> class_labels_;
    std::size_t target_position_ = std::numeric_limits<std::size_t>::max();
};

struct LoadOptions {
    std::string target;
    Task task = Task::Regression;
    std::size_t categorical_threshold = 20;
    std::map<std::string, ColumnKind> kind_overrides;
};

/// Loads a CSV with a header row. Empty cells and "NA" are missing.
Dataset load_csv(const std::string& path, const LoadOptions& options);
/// Same as load_csv, reading from an in-memory buffer.
Dataset parse_csv(const std::string& text, const LoadOptions& options);

/// Ordered list of distinct row indices plus the seed that produced it.
struct RowIndexSet {
    std::vector<std::size_t> rows;
    std::uint64_t seed = 0;

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    auto begin() const { return rows.begin(); }
    auto end() const { return rows.end(); }
    bool operator==(const RowIndexSet&) const = default;
};

RowIndexSet all_rows(std::size_t n);

/// Nested training blocks for successive halving; rounds.back() is the full
/// training set.
struct BlockSchedule {
    std::vector<RowIndexSet> rounds;
};

/// Disjoint, exhaustive train/validation split. Outputs are sorted.
std::pair<RowIndexSet, RowIndexSet> split(const Dataset& ds, double valid_ratio,
                                          bool stratify, std::uint64_t seed);

/// Sampling without replacement; keeps the relative order of `src`.
/// `labels` is indexed by row id.
RowIndexSet subsample(const RowIndexSet& src, double ratio, bool stratify,
                      std::span<const double> labels, std::uint64_t seed);

BlockSchedule make_blocks(const RowIndexSet& train, int n_blocks_log2,
                          std::uint64_t seed);

/// Copy of the dataset restricted to `rows`, in that order.
Dataset take_rows(const Dataset& ds, const RowIndexSet& rows);

}  // namespace scopefe
