#include "dams/table.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "dams/errors.hpp"

namespace dams {

namespace {

namespace fs = std::filesystem;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& cell, const std::string& path,
                    std::size_t line_no) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    std::ostringstream msg;
    msg << path << ":" << line_no << ": cell '" << cell << "' is not numeric";
    throw UsageError(msg.str());
  }
  return value;
}

std::string escape_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct ParsedCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

ParsedCsv read_csv_cells(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  ParsedCsv out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_record(line);
    if (out.header.empty()) {
      out.header = std::move(cells);
    } else {
      if (cells.size() != out.header.size()) {
        std::ostringstream msg;
        msg << path << ":" << line_no << ": expected " << out.header.size()
            << " fields, found " << cells.size();
        throw UsageError(msg.str());
      }
      out.rows.push_back(std::move(cells));
    }
  }
  if (out.header.empty())
    throw UsageError("'" + path + "' is empty or has no header row");
  return out;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::vector<std::string> default_columns(Eigen::Index d) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j)
    names.push_back("x" + std::to_string(j + 1));
  return names;
}

LabeledTable read_labeled_csv(const std::string& path, const std::string& label) {
  ParsedCsv csv = read_csv_cells(path);
  std::ptrdiff_t label_idx = -1;
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (csv.header[j] == label) label_idx = static_cast<std::ptrdiff_t>(j);
  if (label_idx < 0)
    throw UsageError("'" + path + "' has no column named '" + label + "'");

  const Eigen::Index n = static_cast<Eigen::Index>(csv.rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(csv.header.size()) - 1;
  LabeledTable table;
  table.x.resize(n, d);
  table.y.resize(n);
  table.label_name = label;
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (static_cast<std::ptrdiff_t>(j) != label_idx)
      table.columns.push_back(csv.header[j]);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = csv.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = parse_double(cells[j], path, static_cast<std::size_t>(i) + 2);
      if (static_cast<std::ptrdiff_t>(j) == label_idx)
        table.y[i] = v;
      else
        table.x(i, col++) = v;
    }
  }
  return table;
}

UnlabeledTable read_unlabeled_csv(const std::string& path,
                                  const std::string& drop_label) {
  ParsedCsv csv = read_csv_cells(path);
  std::ptrdiff_t drop_idx = -1;
  if (!drop_label.empty())
    for (std::size_t j = 0; j < csv.header.size(); ++j)
      if (csv.header[j] == drop_label) drop_idx = static_cast<std::ptrdiff_t>(j);

  const Eigen::Index n = static_cast<Eigen::Index>(csv.rows.size());
  const Eigen::Index d =
      static_cast<Eigen::Index>(csv.header.size()) - (drop_idx >= 0 ? 1 : 0);
  UnlabeledTable table;
  table.x.resize(n, d);
  for (std::size_t j = 0; j < csv.header.size(); ++j)
    if (static_cast<std::ptrdiff_t>(j) != drop_idx)
      table.columns.push_back(csv.header[j]);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& cells = csv.rows[static_cast<std::size_t>(i)];
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == drop_idx) continue;
      table.x(i, col++) =
          parse_double(cells[j], path, static_cast<std::size_t>(i) + 2);
    }
  }
  return table;
}

namespace {

std::string render_csv(const Eigen::MatrixXd& x, const Eigen::VectorXd* y,
                       const std::vector<std::string>& columns,
                       const std::string& label_name) {
  std::string out;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (j) out += ',';
    out += escape_field(columns[j]);
  }
  if (y) {
    if (!columns.empty()) out += ',';
    out += escape_field(label_name);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (j) out += ',';
      out += format_number(x(i, j));
    }
    if (y) {
      if (x.cols() > 0) out += ',';
      out += format_number((*y)[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void write_csv(const std::string& path, const LabeledTable& table) {
  if (static_cast<Eigen::Index>(table.columns.size()) != table.cols())
    throw UsageError("column name count does not match table width");
  write_text_atomic(path,
                    render_csv(table.x, &table.y, table.columns, table.label_name));
}

void write_csv(const std::string& path, const UnlabeledTable& table) {
  if (static_cast<Eigen::Index>(table.columns.size()) != table.cols())
    throw UsageError("column name count does not match table width");
  write_text_atomic(path, render_csv(table.x, nullptr, table.columns, ""));
}

void write_text_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw UsageError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec)
    throw UsageError("cannot move '" + tmp.string() + "' to '" + path +
                     "': " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace dams
