// Turns raw mixed-type CSV data into a numeric covariate table: categorical
// columns become one-hot dummies, numeric columns are standardized, and
// uninformative columns (duplicates, rare dummies, low variance) are dropped.
#ifndef DAMS_PREPROCESS_HPP
#define DAMS_PREPROCESS_HPP

#include <json.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "dams/table.hpp"

namespace dams {

// A CSV file before type interpretation: every cell kept as text.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Reads a CSV of strings.  With has_header=false, `columns` must supply the
// names.  With has_header=true, `columns`, if non-empty, must match the file
// width and overrides the header names.
RawTable read_raw_csv(const std::string& path, bool has_header = true,
                      const std::vector<std::string>& columns = {});

struct PreprocessConfig {
  bool has_header = true;
  std::vector<std::string> columns;       // names for header-less files
  std::string label;                      // column carried through unchanged
  std::vector<std::string> drop_columns;  // columns removed before encoding
  std::vector<std::string> missing_tokens = {"", "?"};
  bool drop_rows_with_missing = true;
  double min_prevalence = 0.05;  // dummies rarer than this are dropped
  double min_variance = 0.05;    // applied after standardization
  bool standardize_numeric = true;
  bool drop_duplicate_columns = true;
};

// Reads {"has_header":bool, "columns":[...], "label":str, "drop_columns":[...],
// "missing_tokens":[...], "drop_rows_with_missing":bool, "min_prevalence":num,
// "min_variance":num, "standardize_numeric":bool,
// "drop_duplicate_columns":bool}; all keys optional.  Unknown keys are errors.
PreprocessConfig preprocess_config_from_json(const nlohmann::json& j);

struct PreprocessReport {
  std::int64_t rows_in = 0;
  std::int64_t rows_dropped_missing = 0;
  std::vector<std::string> numeric_columns;
  std::vector<std::string> categorical_columns;
  std::vector<std::string> dropped_duplicate;
  std::vector<std::string> dropped_rare;
  std::vector<std::string> dropped_low_variance;
};

struct PreprocessResult {
  LabeledTable table;  // y left zero when no label column was configured
  bool has_label = false;
  PreprocessReport report;
};

// Applies the pipeline: drop configured columns, drop rows with missing
// tokens, detect column types (numeric iff every cell parses as a decimal
// number), expand categoricals to "col=value" dummies, drop exact duplicate
// columns (first occurrence wins), drop dummies with prevalence below
// min_prevalence, standardize numerics to mean 0 / unit variance, then drop
// any column whose post-standardization variance falls below min_variance.
PreprocessResult preprocess_table(const RawTable& raw, const PreprocessConfig& cfg);

nlohmann::json to_json(const PreprocessReport& report);

}  // namespace dams

#endif  // DAMS_PREPROCESS_HPP
