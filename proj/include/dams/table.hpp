// Row-major data tables with named columns, and CSV I/O.  All file writes
// are atomic (temp file + rename) so partially written outputs never appear
// under the final name.
#ifndef DAMS_TABLE_HPP
#define DAMS_TABLE_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace dams {

struct UnlabeledTable {
  Eigen::MatrixXd x;
  std::vector<std::string> columns;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
};

struct LabeledTable {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<std::string> columns;
  std::string label_name = "y";

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
  UnlabeledTable covariates() const { return {x, columns}; }
};

// Default column names x1..xd.
std::vector<std::string> default_columns(Eigen::Index d);

// Reads a numeric CSV with a header row.  The named label column may appear
// anywhere; remaining columns become covariates in file order.
LabeledTable read_labeled_csv(const std::string& path, const std::string& label);

// Reads a numeric CSV with a header row; if `drop_label` names an existing
// column it is ignored, everything else becomes covariates.
UnlabeledTable read_unlabeled_csv(const std::string& path,
                                  const std::string& drop_label = "");

void write_csv(const std::string& path, const LabeledTable& table);
void write_csv(const std::string& path, const UnlabeledTable& table);

// Writes content to path atomically.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

// Splits one CSV record honoring double quotes; trims unquoted whitespace.
std::vector<std::string> split_csv_record(const std::string& line);

// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

}  // namespace dams

#endif  // DAMS_TABLE_HPP
