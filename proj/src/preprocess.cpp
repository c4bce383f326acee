#include "dams/preprocess.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "dams/errors.hpp"

namespace dams {
namespace {

std::optional<double> try_parse_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return value;
}

bool is_binary_column(const Eigen::VectorXd& col) {
  return ((col.array() == 0.0) || (col.array() == 1.0)).all();
}

double population_variance(const Eigen::VectorXd& col) {
  const double mean = col.mean();
  return (col.array() - mean).square().mean();
}

// One covariate column mid-pipeline, with its provenance for the report.
struct WorkColumn {
  std::string name;
  Eigen::VectorXd values;
  bool is_dummy = false;
};

}  // namespace

RawTable read_raw_csv(const std::string& path, bool has_header,
                      const std::vector<std::string>& columns) {
  const std::string text = read_text(path);
  std::istringstream lines(text);
  std::string line;
  RawTable raw;
  std::int64_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_record(line);
    if (raw.columns.empty() && raw.rows.empty()) {
      if (has_header) {
        raw.columns = cells;
        if (!columns.empty()) {
          if (columns.size() != cells.size())
            throw UsageError(path + ": " + std::to_string(columns.size()) +
                             " column names given but file has " +
                             std::to_string(cells.size()) + " columns");
          raw.columns = columns;
        }
        continue;
      }
      if (columns.empty())
        throw UsageError(path + ": column names are required for a file without a header");
      if (columns.size() != cells.size())
        throw UsageError(path + ": " + std::to_string(columns.size()) +
                         " column names given but file has " +
                         std::to_string(cells.size()) + " columns");
      raw.columns = columns;
    }
    if (cells.size() != raw.columns.size())
      throw UsageError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(raw.columns.size()) + " fields, found " +
                       std::to_string(cells.size()));
    raw.rows.push_back(std::move(cells));
  }
  if (raw.columns.empty()) throw UsageError(path + ": empty file");
  return raw;
}

PreprocessConfig preprocess_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw UsageError("preprocess config: expected a JSON object");
  PreprocessConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "has_header") {
      cfg.has_header = value.get<bool>();
    } else if (key == "columns") {
      cfg.columns = value.get<std::vector<std::string>>();
    } else if (key == "label") {
      cfg.label = value.get<std::string>();
    } else if (key == "drop_columns") {
      cfg.drop_columns = value.get<std::vector<std::string>>();
    } else if (key == "missing_tokens") {
      cfg.missing_tokens = value.get<std::vector<std::string>>();
    } else if (key == "drop_rows_with_missing") {
      cfg.drop_rows_with_missing = value.get<bool>();
    } else if (key == "min_prevalence") {
      cfg.min_prevalence = value.get<double>();
    } else if (key == "min_variance") {
      cfg.min_variance = value.get<double>();
    } else if (key == "standardize_numeric") {
      cfg.standardize_numeric = value.get<bool>();
    } else if (key == "drop_duplicate_columns") {
      cfg.drop_duplicate_columns = value.get<bool>();
    } else {
      throw UsageError("preprocess config: unknown key \"" + key + "\"");
    }
  }
  return cfg;
}

PreprocessResult preprocess_table(const RawTable& raw, const PreprocessConfig& cfg) {
  PreprocessResult result;
  PreprocessReport& report = result.report;
  report.rows_in = static_cast<std::int64_t>(raw.rows.size());

  const std::set<std::string> dropped_names(cfg.drop_columns.begin(),
                                            cfg.drop_columns.end());
  for (const std::string& name : cfg.drop_columns) {
    if (std::find(raw.columns.begin(), raw.columns.end(), name) == raw.columns.end())
      throw UsageError("preprocess: drop column \"" + name + "\" not found");
  }

  std::vector<std::size_t> active;  // column indices that survive the drop list
  std::optional<std::size_t> label_index;
  for (std::size_t c = 0; c < raw.columns.size(); ++c) {
    if (!cfg.label.empty() && raw.columns[c] == cfg.label) {
      label_index = c;
      continue;
    }
    if (!dropped_names.count(raw.columns[c])) active.push_back(c);
  }
  if (!cfg.label.empty() && !label_index)
    throw UsageError("preprocess: label column \"" + cfg.label + "\" not found");
  if (active.empty()) throw UsageError("preprocess: no covariate columns remain");

  const std::set<std::string> missing(cfg.missing_tokens.begin(),
                                      cfg.missing_tokens.end());
  std::vector<char> scan_for_missing(raw.columns.size(), 0);
  for (std::size_t c : active) scan_for_missing[c] = 1;
  if (label_index) scan_for_missing[*label_index] = 1;
  std::vector<std::size_t> kept_rows;
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    bool has_missing = false;
    for (std::size_t c = 0; c < raw.columns.size(); ++c) {
      if (!scan_for_missing[c]) continue;  // dropped columns may hold anything
      if (missing.count(raw.rows[r][c])) {
        has_missing = true;
        break;
      }
    }
    if (has_missing && cfg.drop_rows_with_missing) continue;
    if (has_missing)
      throw UsageError("preprocess: missing value in row " + std::to_string(r + 1) +
                       " (enable drop_rows_with_missing to skip such rows)");
    kept_rows.push_back(r);
  }
  report.rows_dropped_missing = report.rows_in -
                                static_cast<std::int64_t>(kept_rows.size());
  const auto n = static_cast<Eigen::Index>(kept_rows.size());
  if (n < 2) throw UsageError("preprocess: fewer than two usable rows");

  // Type detection and expansion: numeric columns pass through, categorical
  // columns become one dummy per distinct value (values in sorted order).
  std::vector<WorkColumn> work;
  for (std::size_t c : active) {
    bool numeric = true;
    for (std::size_t r : kept_rows) {
      if (!try_parse_double(raw.rows[r][c])) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      WorkColumn col;
      col.name = raw.columns[c];
      col.values.resize(n);
      for (Eigen::Index i = 0; i < n; ++i)
        col.values[i] = *try_parse_double(raw.rows[kept_rows[i]][c]);
      work.push_back(std::move(col));
      report.numeric_columns.push_back(raw.columns[c]);
    } else {
      std::set<std::string> levels;
      for (std::size_t r : kept_rows) levels.insert(raw.rows[r][c]);
      for (const std::string& level : levels) {
        WorkColumn col;
        col.name = raw.columns[c] + "=" + level;
        col.is_dummy = true;
        col.values.resize(n);
        for (Eigen::Index i = 0; i < n; ++i)
          col.values[i] = raw.rows[kept_rows[i]][c] == level ? 1.0 : 0.0;
        work.push_back(std::move(col));
      }
      report.categorical_columns.push_back(raw.columns[c]);
    }
  }

  if (cfg.drop_duplicate_columns) {
    std::vector<WorkColumn> unique;
    for (WorkColumn& col : work) {
      bool duplicate = false;
      for (const WorkColumn& kept : unique) {
        if ((kept.values.array() == col.values.array()).all()) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        report.dropped_duplicate.push_back(col.name);
      } else {
        unique.push_back(std::move(col));
      }
    }
    work = std::move(unique);
  }

  // Standardize non-binary numeric columns.  A constant column becomes all
  // zeros and falls to the variance rule below.
  if (cfg.standardize_numeric) {
    for (WorkColumn& col : work) {
      if (col.is_dummy || is_binary_column(col.values)) continue;
      const double mean = col.values.mean();
      const double sd = std::sqrt(population_variance(col.values));
      col.values.array() -= mean;
      if (sd > 0) col.values /= sd;
    }
  }

  {
    std::vector<WorkColumn> kept;
    for (WorkColumn& col : work) {
      if (is_binary_column(col.values) && col.values.mean() < cfg.min_prevalence) {
        report.dropped_rare.push_back(col.name);
      } else if (population_variance(col.values) < cfg.min_variance) {
        report.dropped_low_variance.push_back(col.name);
      } else {
        kept.push_back(std::move(col));
      }
    }
    work = std::move(kept);
  }
  if (work.empty()) throw UsageError("preprocess: every covariate column was dropped");

  LabeledTable& table = result.table;
  table.x.resize(n, static_cast<Eigen::Index>(work.size()));
  for (std::size_t c = 0; c < work.size(); ++c) {
    table.x.col(static_cast<Eigen::Index>(c)) = work[c].values;
    table.columns.push_back(work[c].name);
  }
  table.y = Eigen::VectorXd::Zero(n);
  if (label_index) {
    result.has_label = true;
    table.label_name = cfg.label;
    bool numeric = true;
    for (std::size_t r : kept_rows) {
      if (!try_parse_double(raw.rows[r][*label_index])) {
        numeric = false;
        break;
      }
    }
    if (numeric) {
      for (Eigen::Index i = 0; i < n; ++i)
        table.y[i] = *try_parse_double(raw.rows[kept_rows[i]][*label_index]);
    } else {
      std::set<std::string> levels;
      for (std::size_t r : kept_rows) levels.insert(raw.rows[r][*label_index]);
      if (levels.size() != 2)
        throw UsageError("preprocess: label column \"" + cfg.label +
                         "\" is neither numeric nor binary");
      // Two text levels map to 0/1 in sorted order.
      const std::string& one = *std::next(levels.begin());
      for (Eigen::Index i = 0; i < n; ++i)
        table.y[i] = raw.rows[kept_rows[i]][*label_index] == one ? 1.0 : 0.0;
    }
  }
  return result;
}

nlohmann::json to_json(const PreprocessReport& report) {
  return {{"rows_in", report.rows_in},
          {"rows_dropped_missing", report.rows_dropped_missing},
          {"numeric_columns", report.numeric_columns},
          {"categorical_columns", report.categorical_columns},
          {"dropped_duplicate", report.dropped_duplicate},
          {"dropped_rare", report.dropped_rare},
          {"dropped_low_variance", report.dropped_low_variance}};
}

}  // namespace dams
