#include "crossitr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "crossitr/rng.hpp"

namespace crossitr {

ValidationError::ValidationError(std::vector<RowIssue> issues)
    : Error([&] {
          std::string msg = "validation failed:";
          for (const auto& issue : issues)
              msg += " row " + std::to_string(issue.row) + ": " + issue.message + ";";
          return msg;
      }()),
      issues_(std::move(issues)) {}

PoorAllocationError::PoorAllocationError(std::size_t fold)
    : Error("fold " + std::to_string(fold) + ": " + kPoorAllocationWarning), fold_(fold) {}

namespace {

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

void check_propensity(double p, double floor) {
    if (!(p > 0.0 && p <= 1.0)) throw ArgumentError("propensity must lie in (0, 1]");
    if (p < floor) throw ArgumentError("propensity below the positivity floor");
}

}  // namespace

void validate(const CrossoverObservation& obs, double propensity_floor) {
    if (obs.a1 != 1 && obs.a1 != -1) throw ArgumentError("a1 must be -1 or +1");
    if (!all_finite(obs.x)) throw ArgumentError("non-finite covariate");
    if (!std::isfinite(obs.y1) || !std::isfinite(obs.y2)) throw ArgumentError("non-finite outcome");
    check_propensity(obs.propensity, propensity_floor);
}

void validate(const ParallelObservation& obs, double propensity_floor) {
    if (obs.a != 1 && obs.a != -1) throw ArgumentError("a must be -1 or +1");
    if (!all_finite(obs.x)) throw ArgumentError("non-finite covariate");
    if (!std::isfinite(obs.y)) throw ArgumentError("non-finite outcome");
    check_propensity(obs.propensity, propensity_floor);
}

template <class Obs>
Dataset<Obs>::Dataset(std::vector<Obs> rows, double propensity_floor) : rows_(std::move(rows)) {
    if (rows_.empty()) throw EmptyInputError("dataset has no observations");
    dim_ = rows_.front().x.size();
    std::vector<RowIssue> issues;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        if (rows_[i].x.size() != dim_) {
            issues.push_back({i + 1, "covariate dimension mismatch"});
            continue;
        }
        try {
            validate(rows_[i], propensity_floor);
        } catch (const ArgumentError& e) {
            issues.push_back({i + 1, e.what()});
        }
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

template <class Obs>
Matrix Dataset<Obs>::covariates() const {
    Matrix out(static_cast<Eigen::Index>(rows_.size()), static_cast<Eigen::Index>(dim_));
    for (std::size_t i = 0; i < rows_.size(); ++i)
        for (std::size_t j = 0; j < dim_; ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows_[i].x[j];
    return out;
}

template <class Obs>
Dataset<Obs> Dataset<Obs>::subset(std::span<const std::size_t> indices) const {
    std::vector<Obs> picked;
    picked.reserve(indices.size());
    for (auto i : indices) {
        if (i >= rows_.size()) throw ArgumentError("subset index out of range");
        picked.push_back(rows_[i]);
    }
    return Dataset(std::move(picked));
}

template class Dataset<CrossoverObservation>;
template class Dataset<ParallelObservation>;

ParallelDataset period_one(const CrossoverDataset& data) {
    std::vector<ParallelObservation> rows;
    rows.reserve(data.size());
    for (const auto& o : data) rows.push_back({o.x, o.a1, o.y1, o.propensity});
    return ParallelDataset(std::move(rows));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

std::optional<double> parse_number(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    std::string_view sv(cell);
    if (sv.front() == '+') sv.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
    if (ec != std::errc() || ptr != sv.data() + sv.size()) return std::nullopt;
    return v;
}

}  // namespace

CrossoverDataset parse_crossover_csv(const std::string& text, const CsvSchema& schema,
                                     double propensity_floor) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) {
            header = split_line(line);
            break;
        }
    }
    if (header.empty()) throw EmptyInputError("CSV input is empty");
    if (!header.empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0) header.front().erase(0, 3);

    std::map<std::string, std::size_t> column_of;
    for (std::size_t j = 0; j < header.size(); ++j) column_of.emplace(header[j], j);
    auto require = [&](const std::string& name) {
        auto it = column_of.find(name);
        if (it == column_of.end()) throw SchemaError(name, "missing column '" + name + "'");
        return it->second;
    };

    const std::size_t a1_idx = require(schema.a1_col);
    const std::size_t y1_idx = require(schema.y1_col);
    const std::size_t y2_idx = require(schema.y2_col);
    std::optional<std::size_t> prop_idx;
    if (schema.propensity_col)
        prop_idx = require(*schema.propensity_col);
    else if (auto it = column_of.find("propensity"); it != column_of.end())
        prop_idx = it->second;

    std::vector<std::size_t> x_idx;
    if (schema.x_cols.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (j != a1_idx && j != y1_idx && j != y2_idx && (!prop_idx || j != *prop_idx))
                x_idx.push_back(j);
        if (x_idx.empty()) throw SchemaError("", "no covariate columns in CSV header");
    } else {
        for (const auto& name : schema.x_cols) x_idx.push_back(require(name));
    }

    std::vector<CrossoverObservation> rows;
    std::vector<RowIssue> issues;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split_line(line);
        if (cells.size() != header.size()) {
            issues.push_back({row, "expected " + std::to_string(header.size()) + " cells, found " +
                                       std::to_string(cells.size())});
            continue;
        }
        auto number = [&](std::size_t j) -> std::optional<double> {
            auto v = parse_number(cells[j]);
            if (!v) issues.push_back({row, "non-numeric value '" + cells[j] + "' in column '" +
                                               header[j] + "'"});
            return v;
        };
        CrossoverObservation obs;
        bool ok = true;
        for (auto j : x_idx) {
            auto v = number(j);
            ok = ok && v.has_value();
            obs.x.push_back(v.value_or(0.0));
        }
        const auto a1 = number(a1_idx);
        const auto y1 = number(y1_idx);
        const auto y2 = number(y2_idx);
        std::optional<double> prop = kDefaultPropensity;
        if (prop_idx) prop = number(*prop_idx);
        if (!ok || !a1 || !y1 || !y2 || !prop) continue;
        if (*a1 != 1.0 && *a1 != -1.0) {
            issues.push_back({row, "a1 must be -1 or 1, found '" + cells[a1_idx] + "'"});
            continue;
        }
        obs.a1 = static_cast<int>(*a1);
        obs.y1 = *y1;
        obs.y2 = *y2;
        obs.propensity = *prop;
        try {
            validate(obs, propensity_floor);
        } catch (const ArgumentError& e) {
            issues.push_back({row, e.what()});
            continue;
        }
        rows.push_back(std::move(obs));
    }
    if (!issues.empty()) throw ValidationError(std::move(issues));
    if (rows.empty()) throw EmptyInputError("CSV input has a header but no data rows");
    return CrossoverDataset(std::move(rows), propensity_floor);
}

CrossoverDataset load_crossover_csv(const std::filesystem::path& path, const CsvSchema& schema,
                                    double propensity_floor) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_crossover_csv(buf.str(), schema, propensity_floor);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_crossover_csv(const CrossoverDataset& data) {
    std::string out;
    for (std::size_t j = 0; j < data.dim(); ++j) out += "x" + std::to_string(j + 1) + ",";
    out += "a1,y1,y2,propensity\n";
    for (const auto& o : data) {
        for (double v : o.x) out += format_double(v) + ",";
        out += std::to_string(o.a1) + "," + format_double(o.y1) + "," + format_double(o.y2) + "," +
               format_double(o.propensity) + "\n";
    }
    return out;
}

void write_crossover_csv(const std::filesystem::path& path, const CrossoverDataset& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << format_crossover_csv(data);
}

// ---------------------------------------------------------------------------
// Folds
// ---------------------------------------------------------------------------

FoldSplit split_folds(std::size_t n, std::size_t k, std::span<const int> labels,
                      std::uint64_t seed) {
    if (k < 2) throw ArgumentError("fold count must be at least 2");
    if (k > n) throw ArgumentError("fold count exceeds number of observations");
    if (!labels.empty() && labels.size() != n) throw ArgumentError("label count differs from n");

    Rng rng(seed);
    FoldSplit split;
    split.folds.resize(k);

    // Deal label groups one after another, continuing the round-robin
    // position, so sizes stay balanced and each group is spread evenly.
    std::vector<std::vector<std::size_t>> groups;
    if (labels.empty()) {
        groups.emplace_back(n);
        for (std::size_t i = 0; i < n; ++i) groups[0][i] = i;
    } else {
        std::map<int, std::vector<std::size_t>> by_label;
        for (std::size_t i = 0; i < n; ++i) by_label[labels[i]].push_back(i);
        for (auto& [label, idx] : by_label) {
            if (idx.size() < k) split.poor_allocation = true;
            groups.push_back(std::move(idx));
        }
    }
    std::size_t pos = 0;
    for (auto& group : groups) {
        rng.shuffle(group.begin(), group.end());
        for (auto i : group) split.folds[pos++ % k].push_back(i);
    }
    for (auto& fold : split.folds) std::sort(fold.begin(), fold.end());
    return split;
}

FoldSplit split_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    return split_folds(n, k, std::span<const int>{}, seed);
}

std::vector<std::size_t> training_indices(const FoldSplit& split, std::size_t f, std::size_t n) {
    std::vector<bool> held(n, false);
    for (auto i : split.folds.at(f)) held[i] = true;
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!held[i]) out.push_back(i);
    return out;
}

}  // namespace crossitr
