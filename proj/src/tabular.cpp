#include "scopefe/tabular.hpp"

#include "scopefe/csv.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

namespace scopefe {

std::string to_string(ColumnKind kind) {
    return kind == ColumnKind::Numeric ? "numeric" : "categorical";
}

std::string to_string(Task task) {
    return task == Task::Regression ? "regression" : "binary";
}

ColumnKind parse_column_kind(const std::string& text) {
    if (text == "numeric") return ColumnKind::Numeric;
    if (text == "categorical") return ColumnKind::Categorical;
    throw Error("unknown column kind '" + text + "'");
}

Task parse_task(const std::string& text) {
    if (text == "regression") return Task::Regression;
    if (text == "binary" || text == "classification") return Task::Binary;
    if (text == "multiclass") throw Error("unsupported task: multiclass targets are not supported");
    throw Error("unknown task '" + text + "'");
}

Dataset::Dataset(std::vector<std::string> names, std::vector<Column> columns,
                 std::string target_name, std::vector<double> target, Task task)
    : data_(std::move(columns)),
      target_name_(std::move(target_name)),
      target_(std::move(target)),
      task_(task) {
    if (names.size() != data_.size()) throw Error("dataset: name/column count mismatch");
    std::unordered_set<std::string> seen;
    const std::size_t n = target_.size();
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!seen.insert(names[i]).second) {
            throw Error("dataset: duplicate column name '" + names[i] + "'");
        }
        if (names[i] == target_name_) {
            throw Error("dataset: feature column shares the target name '" + names[i] + "'");
        }
        const Column& c = data_[i];
        if (c.size() != n) {
            throw Error("dataset: column '" + names[i] + "' has " + std::to_string(c.size()) +
                        " rows, expected " + std::to_string(n));
        }
        if (c.kind == ColumnKind::Categorical) {
            for (std::int32_t code : c.codes) {
                if (code >= c.cardinality) {
                    throw Error("dataset: category code out of range in '" + names[i] + "'");
                }
            }
        }
        meta_.push_back({names[i], c.kind, i});
    }
    if (task_ == Task::Binary) {
        for (double v : target_) {
            if (v != 0.0 && v != 1.0) throw Error("dataset: binary target must be 0/1");
        }
    }
}

std::optional<std::size_t> Dataset::find(const std::string& name) const {
    for (const auto& m : meta_) {
        if (m.name == name) return m.index;
    }
    return std::nullopt;
}

std::span<const double> Dataset::numeric(std::size_t i) const {
    const Column& c = data_.at(i);
    if (c.kind != ColumnKind::Numeric) throw Error("column '" + meta_[i].name + "' is not numeric");
    return c.numeric;
}

std::span<const std::int32_t> Dataset::codes(std::size_t i) const {
    const Column& c = data_.at(i);
    if (c.kind != ColumnKind::Categorical) {
        throw Error("column '" + meta_[i].name + "' is not categorical");
    }
    return c.codes;
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool is_missing_cell(std::string_view s) { return s.empty() || s == "NA"; }

std::optional<double> parse_real(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

Column build_categorical(const std::vector<std::string_view>& cells) {
    std::set<std::string_view> levels;
    for (auto c : cells) {
        if (!is_missing_cell(c)) levels.insert(c);
    }
    Column col;
    col.kind = ColumnKind::Categorical;
    col.dictionary.assign(levels.begin(), levels.end());
    col.cardinality = static_cast<std::int32_t>(col.dictionary.size());
    col.codes.reserve(cells.size());
    for (auto c : cells) {
        if (is_missing_cell(c)) {
            col.codes.push_back(kMissingCode);
        } else {
            auto it = std::lower_bound(col.dictionary.begin(), col.dictionary.end(), c);
            col.codes.push_back(static_cast<std::int32_t>(it - col.dictionary.begin()));
        }
    }
    return col;
}

}  // namespace

Dataset parse_csv(const std::string& text, const LoadOptions& options) {
    const auto records = csv::parse(text);
    if (records.empty()) throw Error("csv: missing header row");
    const auto& header = records.front();
    if (records.size() < 2) throw Error("csv: zero data rows");
    const std::size_t n = records.size() - 1;
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != header.size()) {
            throw Error("csv: row " + std::to_string(r) + " has " +
                        std::to_string(records[r].size()) + " fields, expected " +
                        std::to_string(header.size()));
        }
    }

    const auto target_it = std::find(header.begin(), header.end(), options.target);
    if (options.target.empty() || target_it == header.end()) {
        throw Error("csv: target column '" + options.target + "' absent");
    }
    const std::size_t target_col = static_cast<std::size_t>(target_it - header.begin());

    for (const auto& [name, kind] : options.kind_overrides) {
        if (std::find(header.begin(), header.end(), name) == header.end()) {
            throw Error("csv: kind override for unknown column '" + name + "'");
        }
    }

    std::vector<std::string> names;
    std::vector<Column> columns;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == target_col) continue;
        const std::string& name = header[c];
        std::vector<std::string_view> cells(n);
        std::size_t present = 0;
        bool all_numeric = true;
        std::vector<double> values(n, kMissing);
        std::unordered_set<double> distinct;
        for (std::size_t r = 0; r < n; ++r) {
            cells[r] = trim(records[r + 1][c]);
            if (is_missing_cell(cells[r])) continue;
            ++present;
            if (all_numeric) {
                if (auto v = parse_real(cells[r])) {
                    values[r] = *v;
                    distinct.insert(*v);
                } else {
                    all_numeric = false;
                }
            }
        }
        if (present == 0) throw Error("csv: column '" + name + "' has zero non-missing cells");

        ColumnKind kind;
        if (auto it = options.kind_overrides.find(name); it != options.kind_overrides.end()) {
            kind = it->second;
            if (kind == ColumnKind::Numeric && !all_numeric) {
                throw Error("csv: column '" + name + "' overridden as numeric but has non-numeric cells");
            }
        } else if (!all_numeric) {
            kind = ColumnKind::Categorical;
        } else {
            // Low-cardinality numeric codes are categorical, unless every value
            // is distinct (too few rows to tell).
            const bool low_cardinality = distinct.size() <= options.categorical_threshold;
            const bool repeats = distinct.size() < present;
            kind = (low_cardinality && repeats) ? ColumnKind::Categorical : ColumnKind::Numeric;
        }

        if (kind == ColumnKind::Numeric) {
            Column col;
            col.kind = ColumnKind::Numeric;
            col.numeric = std::move(values);
            columns.push_back(std::move(col));
        } else {
            columns.push_back(build_categorical(cells));
        }
        names.push_back(name);
    }

    std::vector<double> target(n);
    std::vector<std::string> class_labels;
    if (options.task == Task::Regression) {
        for (std::size_t r = 0; r < n; ++r) {
            auto cell = trim(records[r + 1][target_col]);
            if (is_missing_cell(cell)) throw Error("csv: target has missing values");
            auto v = parse_real(cell);
            if (!v) throw Error("csv: non-numeric regression target '" + std::string(cell) + "'");
            target[r] = *v;
        }
    } else {
        std::set<std::string_view> labels;
        for (std::size_t r = 0; r < n; ++r) {
            auto cell = trim(records[r + 1][target_col]);
            if (is_missing_cell(cell)) throw Error("csv: target has missing values");
            labels.insert(cell);
        }
        if (labels.size() > 2) {
            throw Error("unsupported task: target has " + std::to_string(labels.size()) +
                        " classes (multiclass targets are not supported)");
        }
        if (labels.size() < 2) throw Error("csv: binary target has a single class");
        std::vector<std::string_view> ordered(labels.begin(), labels.end());
        auto a = parse_real(ordered[0]);
        auto b = parse_real(ordered[1]);
        if (a && b && *b < *a) std::swap(ordered[0], ordered[1]);
        for (std::size_t r = 0; r < n; ++r) {
            target[r] = trim(records[r + 1][target_col]) == ordered[1] ? 1.0 : 0.0;
        }
        class_labels = {std::string(ordered[0]), std::string(ordered[1])};
    }

    Dataset ds(std::move(names), std::move(columns), options.target, std::move(target),
               options.task);
    ds.set_class_labels(std::move(class_labels));
    ds.set_target_position(target_col);
    return ds;
}

Dataset load_csv(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("csv: cannot read file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

RowIndexSet all_rows(std::size_t n) {
    RowIndexSet s;
    s.rows.resize(n);
    std::iota(s.rows.begin(), s.rows.end(), std::size_t{0});
    return s;
}

namespace {

/// Groups positions of `rows` by class label, classes in ascending order.
std::vector<std::vector<std::size_t>> group_by_class(const std::vector<std::size_t>& rows,
                                                     std::span<const double> labels) {
    std::vector<double> classes;
    for (std::size_t r : rows) classes.push_back(labels[r]);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    std::vector<std::vector<std::size_t>> groups(classes.size());
    for (std::size_t pos = 0; pos < rows.size(); ++pos) {
        auto it = std::lower_bound(classes.begin(), classes.end(), labels[rows[pos]]);
        groups[static_cast<std::size_t>(it - classes.begin())].push_back(pos);
    }
    return groups;
}

std::size_t round_count(double x) { return static_cast<std::size_t>(std::llround(x)); }

}  // namespace

std::pair<RowIndexSet, RowIndexSet> split(const Dataset& ds, double valid_ratio, bool stratify,
                                          std::uint64_t seed) {
    if (!(valid_ratio > 0.0 && valid_ratio < 1.0)) throw Error("split: valid_ratio must be in (0, 1)");
    const std::size_t n = ds.num_rows();
    if (n < 2) throw Error("split: need at least 2 rows");
    if (stratify && ds.task() != Task::Binary) {
        throw Error("split: stratification requires a classification task");
    }

    std::vector<char> is_valid(n, 0);
    const auto all = all_rows(n).rows;
    if (stratify) {
        auto groups = group_by_class(all, ds.target());
        for (std::size_t c = 0; c < groups.size(); ++c) {
            auto& g = groups[c];
            if (g.size() < 2) throw Error("split: class with fewer than 2 rows under stratification");
            std::size_t take = std::clamp<std::size_t>(round_count(valid_ratio * g.size()), 1, g.size() - 1);
            Rng rng(derive_seed(seed, "split", {c}));
            rng.shuffle(g);
            for (std::size_t i = 0; i < take; ++i) is_valid[g[i]] = 1;
        }
    } else {
        std::size_t take = std::clamp<std::size_t>(round_count(valid_ratio * n), 1, n - 1);
        auto order = all;
        Rng rng(derive_seed(seed, "split"));
        rng.shuffle(order);
        for (std::size_t i = 0; i < take; ++i) is_valid[order[i]] = 1;
    }

    RowIndexSet train{{}, seed}, valid{{}, seed};
    for (std::size_t r = 0; r < n; ++r) (is_valid[r] ? valid : train).rows.push_back(r);
    return {std::move(train), std::move(valid)};
}

RowIndexSet subsample(const RowIndexSet& src, double ratio, bool stratify,
                      std::span<const double> labels, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio <= 1.0)) throw Error("subsample: ratio must be in (0, 1]");
    if (stratify && labels.empty()) throw Error("subsample: stratify requested without labels");
    RowIndexSet out{{}, seed};
    if (src.empty()) return out;
    if (ratio == 1.0) {
        out.rows = src.rows;
        return out;
    }
    const std::size_t total = std::max<std::size_t>(1, round_count(ratio * src.size()));

    std::vector<char> chosen(src.size(), 0);
    if (stratify) {
        auto groups = group_by_class(src.rows, labels);
        // Largest-remainder allocation keeps each class within one row of
        // its exact share while hitting the requested total.
        std::vector<std::size_t> quota(groups.size());
        std::vector<double> remainder(groups.size());
        std::size_t assigned = 0;
        for (std::size_t c = 0; c < groups.size(); ++c) {
            const double exact = ratio * static_cast<double>(groups[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(exact));
            remainder[c] = exact - static_cast<double>(quota[c]);
            assigned += quota[c];
        }
        std::vector<std::size_t> order(groups.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
        for (std::size_t i = 0; assigned < total && i < order.size(); ++i) {
            if (quota[order[i]] < groups[order[i]].size()) {
                ++quota[order[i]];
                ++assigned;
            }
        }
        for (std::size_t c = 0; c < groups.size(); ++c) {
            Rng rng(derive_seed(seed, "subsample", {c}));
            rng.shuffle(groups[c]);
            for (std::size_t i = 0; i < quota[c]; ++i) chosen[groups[c][i]] = 1;
        }
    } else {
        std::vector<std::size_t> positions(src.size());
        std::iota(positions.begin(), positions.end(), std::size_t{0});
        Rng rng(derive_seed(seed, "subsample"));
        rng.shuffle(positions);
        for (std::size_t i = 0; i < total; ++i) chosen[positions[i]] = 1;
    }
    for (std::size_t pos = 0; pos < src.size(); ++pos) {
        if (chosen[pos]) out.rows.push_back(src.rows[pos]);
    }
    return out;
}

BlockSchedule make_blocks(const RowIndexSet& train, int n_blocks_log2, std::uint64_t seed) {
    if (n_blocks_log2 < 0) throw Error("make_blocks: n_blocks_log2 must be non-negative");
    if (n_blocks_log2 > 62 || (std::size_t{1} << n_blocks_log2) > train.size()) {
        throw Error("make_blocks: 2^n_blocks_log2 exceeds the training size");
    }
    auto order = train.rows;
    Rng rng(derive_seed(seed, "blocks"));
    rng.shuffle(order);

    BlockSchedule schedule;
    const double denom = static_cast<double>(std::size_t{1} << n_blocks_log2);
    for (int r = 0; r <= n_blocks_log2; ++r) {
        const double scale = static_cast<double>(std::size_t{1} << r) / denom;
        std::size_t size = r == n_blocks_log2
                               ? order.size()
                               : std::max<std::size_t>(1, round_count(scale * order.size()));
        RowIndexSet block{{order.begin(), order.begin() + static_cast<std::ptrdiff_t>(size)}, seed};
        std::sort(block.rows.begin(), block.rows.end());
        schedule.rounds.push_back(std::move(block));
    }
    return schedule;
}

Dataset take_rows(const Dataset& ds, const RowIndexSet& rows) {
    std::vector<std::string> names;
    std::vector<Column> columns;
    for (std::size_t i = 0; i < ds.num_features(); ++i) {
        names.push_back(ds.column(i).name);
        Column c;
        c.kind = ds.column(i).kind;
        if (c.kind == ColumnKind::Numeric) {
            auto src = ds.numeric(i);
            for (std::size_t r : rows) c.numeric.push_back(src[r]);
        } else {
            auto src = ds.codes(i);
            for (std::size_t r : rows) c.codes.push_back(src[r]);
            c.cardinality = ds.cardinality(i);
            c.dictionary = ds.dictionary(i);
        }
        columns.push_back(std::move(c));
    }
    std::vector<double> target;
    for (std::size_t r : rows) target.push_back(ds.target().at(r));
    Dataset out(std::move(names), std::move(columns), ds.target_name(), std::move(target), ds.task());
    out.set_class_labels(ds.class_labels());
    out.set_target_position(ds.target_position());
    return out;
}

}  // namespace scopefe
