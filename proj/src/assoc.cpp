#include "scopefe/assoc.hpp"

#include "scopefe/csv.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <unordered_map>

namespace scopefe {

double pearson_abs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw Error("pearson_abs: length mismatch");
    std::size_t n = 0;
    double mx = 0.0, my = 0.0;
    // Constancy is checked on the raw values; a rounded mean can leave a
    // constant column with a tiny nonzero spread.
    bool x_const = true, y_const = true;
    double x0 = 0.0, y0 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (is_missing(x[i]) || is_missing(y[i])) continue;
        if (n == 0) {
            x0 = x[i];
            y0 = y[i];
        }
        x_const = x_const && x[i] == x0;
        y_const = y_const && y[i] == y0;
        ++n;
        mx += x[i];
        my += y[i];
    }
    if (n < 2) throw Error("pearson_abs: fewer than 2 jointly present rows");
    if (x_const || y_const) return 0.0;
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (is_missing(x[i]) || is_missing(y[i])) continue;
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return 0.0;
    return std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
}

namespace {

/// Dense relabeling of the categories that occur in jointly present rows.
struct Relabeled {
    std::vector<std::int32_t> a, b;
    std::int32_t ka = 0, kb = 0;
};

Relabeled relabel_joint(std::span<const std::int32_t> x, std::span<const std::int32_t> y) {
    Relabeled out;
    std::unordered_map<std::int32_t, std::int32_t> mx, my;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (is_missing(x[i]) || is_missing(y[i])) continue;
        auto [ix, newx] = mx.try_emplace(x[i], out.ka);
        if (newx) ++out.ka;
        auto [iy, newy] = my.try_emplace(y[i], out.kb);
        if (newy) ++out.kb;
        out.a.push_back(ix->second);
        out.b.push_back(iy->second);
    }
    return out;
}

}  // namespace

double cramers_v(std::span<const std::int32_t> x, std::span<const std::int32_t> y) {
    if (x.size() != y.size()) throw Error("cramers_v: length mismatch");
    const Relabeled j = relabel_joint(x, y);
    const std::size_t n = j.a.size();
    if (n == 0) throw Error("cramers_v: zero jointly present rows");
    const std::int32_t k = j.ka, r = j.kb;
    if (k <= 1 || r <= 1 || n < 2) return 0.0;

    std::vector<double> table(static_cast<std::size_t>(k) * r, 0.0);
    std::vector<double> row_sum(k, 0.0), col_sum(r, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        table[static_cast<std::size_t>(j.a[i]) * r + j.b[i]] += 1.0;
        row_sum[j.a[i]] += 1.0;
        col_sum[j.b[i]] += 1.0;
    }
    const double nn = static_cast<double>(n);
    double chi2 = 0.0;
    for (std::int32_t a = 0; a < k; ++a) {
        for (std::int32_t b = 0; b < r; ++b) {
            const double expected = row_sum[a] * col_sum[b] / nn;
            const double diff = table[static_cast<std::size_t>(a) * r + b] - expected;
            chi2 += diff * diff / expected;
        }
    }
    const double phi2 = chi2 / nn;
    const double kd = k, rd = r;
    const double phi2_corr = std::max(0.0, phi2 - (kd - 1.0) * (rd - 1.0) / (nn - 1.0));
    const double k_corr = kd - (kd - 1.0) * (kd - 1.0) / (nn - 1.0);
    const double r_corr = rd - (rd - 1.0) * (rd - 1.0) / (nn - 1.0);
    const double denom = std::min(k_corr - 1.0, r_corr - 1.0);
    if (k_corr <= 1.0 || r_corr <= 1.0 || denom <= 0.0) return 0.0;
    return std::min(1.0, std::sqrt(phi2_corr / denom));
}

double eta_squared(std::span<const std::int32_t> cat, std::span<const double> num) {
    if (cat.size() != num.size()) throw Error("eta_squared: length mismatch");
    std::unordered_map<std::int32_t, std::pair<double, std::size_t>> groups;
    double total = 0.0;
    std::size_t n = 0;
    bool constant = true;
    double first = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        if (is_missing(cat[i]) || is_missing(num[i])) continue;
        if (n == 0) first = num[i];
        constant = constant && num[i] == first;
        auto& g = groups[cat[i]];
        g.first += num[i];
        ++g.second;
        total += num[i];
        ++n;
    }
    if (n == 0) throw Error("eta_squared: zero jointly present rows");
    if (constant) return 0.0;
    const double mean = total / static_cast<double>(n);
    double ss_total = 0.0;
    for (std::size_t i = 0; i < cat.size(); ++i) {
        if (is_missing(cat[i]) || is_missing(num[i])) continue;
        const double d = num[i] - mean;
        ss_total += d * d;
    }
    if (ss_total <= 0.0) return 0.0;
    double ss_between = 0.0;
    for (const auto& [code, g] : groups) {
        const double d = g.first / static_cast<double>(g.second) - mean;
        ss_between += static_cast<double>(g.second) * d * d;
    }
    return std::clamp(ss_between / ss_total, 0.0, 1.0);
}

namespace {

std::vector<double> gather(std::span<const double> col, const RowIndexSet& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(col[r]);
    return out;
}

std::vector<std::int32_t> gather(std::span<const std::int32_t> col, const RowIndexSet& rows) {
    std::vector<std::int32_t> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(col[r]);
    return out;
}

}  // namespace

SimilarityMatrix similarity_matrix(const Dataset& ds, const RowIndexSet& rows) {
    const std::size_t d = ds.num_features();
    if (d < 2) throw Error("similarity_matrix: need at least 2 features");

    std::vector<std::vector<double>> nums(d);
    std::vector<std::vector<std::int32_t>> cats(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (ds.column(i).kind == ColumnKind::Numeric) {
            nums[i] = gather(ds.numeric(i), rows);
        } else {
            cats[i] = gather(ds.codes(i), rows);
        }
    }

    SimilarityMatrix s;
    for (const auto& c : ds.columns()) s.names.push_back(c.name);
    const auto dd = static_cast<Eigen::Index>(d);
    s.values = Eigen::MatrixXd::Identity(dd, dd);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i + 1; j < d; ++j) {
            const bool ni = ds.column(i).kind == ColumnKind::Numeric;
            const bool nj = ds.column(j).kind == ColumnKind::Numeric;
            double v = 0.0;
            try {
                if (ni && nj) {
                    v = pearson_abs(nums[i], nums[j]);
                } else if (!ni && !nj) {
                    v = cramers_v(cats[i], cats[j]);
                } else if (!ni) {
                    v = eta_squared(cats[i], nums[j]);
                } else {
                    v = eta_squared(cats[j], nums[i]);
                }
            } catch (const Error& e) {
                spdlog::warn("similarity({}, {}) set to 0: {}", s.names[i], s.names[j], e.what());
                v = 0.0;
            }
            s.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
            s.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
        }
    }
    return s;
}

std::string to_csv(const SimilarityMatrix& s) {
    std::string out = csv::join(s.names) + "\n";
    for (std::size_t i = 0; i < s.order(); ++i) {
        std::vector<std::string> fields;
        for (std::size_t j = 0; j < s.order(); ++j) fields.push_back(csv::format_double(s(i, j)));
        out += csv::join(fields) + "\n";
    }
    return out;
}

}  // namespace scopefe
