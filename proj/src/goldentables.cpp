#include "mound/goldentables.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "mound/errors.hpp"
#include "mound/metrics.hpp"

namespace mound {
namespace {

nlohmann::json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open table fixture: " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed table fixture " + path.string() + ": " + e.what());
  }
}

std::vector<CellFlag> parse_flags(const nlohmann::json& j) {
  std::vector<CellFlag> flags;
  if (!j.contains("flags")) return flags;
  for (const auto& f : j.at("flags"))
    flags.push_back({f.at("row").get<std::string>(),
                     f.at("column").get<std::string>(),
                     f.at("recomputed").get<double>()});
  return flags;
}

const CellFlag* find_flag(const std::vector<CellFlag>& flags, const std::string& row,
                          const std::string& column) {
  for (const auto& f : flags)
    if (f.row == row && f.column == column) return &f;
  return nullptr;
}

double rp_percent(double predicted, double actual) {
  return relative_precision(predicted, actual) * 100.0;
}

class Checker {
public:
  Checker(std::string table, const std::vector<CellFlag>& flags,
          TableCheckReport& report)
      : table_(std::move(table)), flags_(flags), report_(report) {}

  void cell(const std::string& row, const std::string& column, double printed,
            double recomputed, double tolerance) {
    CellCheck check;
    check.table = table_;
    check.row = row;
    check.column = column;
    check.printed = printed;
    check.recomputed = recomputed;
    check.tolerance = tolerance;
    if (const auto* flag = find_flag(flags_, row, column)) {
      // Inconsistent printed cell: the recomputation must land on the value
      // derived from the printed primitives, not on the printed cell.
      check.flagged = true;
      check.pass = std::fabs(recomputed - flag->recomputed) <= 1e-9;
    } else {
      check.pass = std::fabs(recomputed - printed) <= tolerance;
    }
    report_.cells.push_back(std::move(check));
  }

private:
  std::string table_;
  const std::vector<CellFlag>& flags_;
  TableCheckReport& report_;
};

CountRow parse_count_row(const nlohmann::json& j) {
  CountRow row;
  row.id = j.at("id").get<std::string>();
  row.gt = j.at("gt").get<double>();
  row.det_a_count = j.at("det_a_count").get<double>();
  row.det_a_rp = j.at("det_a_rp").get<double>();
  if (j.contains("det_b_count")) row.det_b_count = j.at("det_b_count").get<double>();
  if (j.contains("det_b_rp")) row.det_b_rp = j.at("det_b_rp").get<double>();
  row.corr_count = j.at("corr_count").get<double>();
  row.corr_rp = j.at("corr_rp").get<double>();
  if (j.contains("improvement")) row.improvement = j.at("improvement").get<double>();
  return row;
}

} // namespace

bool TableCheckReport::all_pass() const {
  for (const auto& c : cells)
    if (!c.pass) return false;
  return true;
}

DetectorCvTable load_detector_cv_table(const std::filesystem::path& path) {
  const auto j = load_json(path);
  DetectorCvTable table;
  try {
    table.models = j.at("models").get<std::vector<std::string>>();
    table.folds = j.at("folds").get<std::vector<std::string>>();
    table.cells.resize(table.folds.size());
    for (std::size_t f = 0; f < table.folds.size(); ++f) {
      for (const auto& model : table.models) {
        const auto& c = j.at("cells").at(model).at(f);
        table.cells[f].push_back({c.at("p").get<double>(), c.at("r").get<double>(),
                                  c.at("ap").get<double>(), c.at("f1").get<double>()});
      }
    }
    for (const auto& model : table.models) {
      const auto& a = j.at("averages").at(model);
      table.averages.push_back({a.at("p").get<double>(), a.at("r").get<double>(),
                                a.at("ap").get<double>(), a.at("f1").get<double>()});
    }
    if (j.contains("raw_fraction_cells"))
      for (const auto& c : j.at("raw_fraction_cells"))
        table.raw_fraction_cells.push_back({c.at("fold").get<std::string>(),
                                            c.at("model").get<std::string>()});
    table.flags = parse_flags(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad detector table fixture " + path.string() + ": " + e.what());
  }
  return table;
}

CountTable load_count_table(const std::filesystem::path& path) {
  const auto j = load_json(path);
  CountTable table;
  try {
    table.name = j.at("table").get<std::string>();
    for (const auto& r : j.at("rows")) table.rows.push_back(parse_count_row(r));
    if (j.contains("overall")) table.overall = parse_count_row(j.at("overall"));
    const auto& avg = j.at("averages");
    if (avg.contains("det_a_rp")) table.avg_det_a_rp = avg.at("det_a_rp").get<double>();
    if (avg.contains("det_b_rp")) table.avg_det_b_rp = avg.at("det_b_rp").get<double>();
    if (avg.contains("corr_rp")) table.avg_corr_rp = avg.at("corr_rp").get<double>();
    if (avg.contains("improvement"))
      table.avg_improvement = avg.at("improvement").get<double>();
    table.flags = parse_flags(j);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("bad count table fixture " + path.string() + ": " + e.what());
  }
  return table;
}

TableCheckReport check_detector_cv_table(const DetectorCvTable& table) {
  TableCheckReport report;
  Checker check("detector_cv", table.flags, report);
  // F1 cells recomputed from the printed P and R columns.
  for (std::size_t f = 0; f < table.folds.size(); ++f) {
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      const auto& c = table.cells[f][m];
      check.cell(table.folds[f] + "/" + table.models[m], "f1", c.f1,
                 f1_score(c.p, c.r), 0.2);
    }
  }
  // Column averages recomputed as the mean of the printed cells; the source
  // averaged its printed table, so that is the reproducible primitive.
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    DetectorCvCell sum;
    for (std::size_t f = 0; f < table.folds.size(); ++f) {
      sum.p += table.cells[f][m].p;
      sum.r += table.cells[f][m].r;
      sum.ap += table.cells[f][m].ap;
      sum.f1 += table.cells[f][m].f1;
    }
    const auto n = static_cast<double>(table.folds.size());
    const std::string row = "average/" + table.models[m];
    check.cell(row, "p", table.averages[m].p, sum.p / n, 0.1);
    check.cell(row, "r", table.averages[m].r, sum.r / n, 0.1);
    check.cell(row, "ap", table.averages[m].ap, sum.ap / n, 0.1);
    check.cell(row, "f1", table.averages[m].f1, sum.f1 / n, 0.1);
  }
  return report;
}

TableCheckReport check_count_table(const CountTable& table) {
  TableCheckReport report;
  Checker check(table.name, table.flags, report);

  double sum_gt = 0.0, sum_a = 0.0, sum_b = 0.0, sum_corr = 0.0;
  double rp_a_sum = 0.0, rp_b_sum = 0.0, rp_corr_sum = 0.0, imp_printed_sum = 0.0;
  bool has_b = false;
  for (const auto& row : table.rows) {
    const double a_rp = rp_percent(row.det_a_count, row.gt);
    const double corr_rp = rp_percent(row.corr_count, row.gt);
    check.cell(row.id, "det_a_rp", row.det_a_rp, a_rp, 0.1);
    check.cell(row.id, "corr_rp", row.corr_rp, corr_rp, 0.1);
    if (row.det_b_count && row.det_b_rp) {
      has_b = true;
      const double b_rp = rp_percent(*row.det_b_count, row.gt);
      // that column is printed at integer precision
      check.cell(row.id, "det_b_rp", *row.det_b_rp, b_rp, 0.5);
      sum_b += *row.det_b_count;
      rp_b_sum += b_rp;
    }
    if (row.improvement) {
      check.cell(row.id, "improvement", *row.improvement, corr_rp - a_rp, 0.1);
      imp_printed_sum += *row.improvement;
    }
    sum_gt += row.gt;
    sum_a += row.det_a_count;
    sum_corr += row.corr_count;
    rp_a_sum += a_rp;
    rp_corr_sum += corr_rp;
  }

  if (table.overall) {
    const auto& o = *table.overall;
    check.cell("overall", "gt", o.gt, sum_gt, 0.0);
    check.cell("overall", "det_a_count", o.det_a_count, sum_a, 0.0);
    check.cell("overall", "corr_count", o.corr_count, sum_corr, 0.0);
    check.cell("overall", "det_a_rp", o.det_a_rp, rp_percent(o.det_a_count, o.gt), 0.1);
    check.cell("overall", "corr_rp", o.corr_rp, rp_percent(o.corr_count, o.gt), 0.1);
    if (o.det_b_count && o.det_b_rp) {
      check.cell("overall", "det_b_count", *o.det_b_count, sum_b, 0.0);
      check.cell("overall", "det_b_rp", *o.det_b_rp,
                 rp_percent(*o.det_b_count, o.gt), 0.1);
    }
  }

  const auto n = static_cast<double>(table.rows.size());
  if (table.avg_det_a_rp)
    check.cell("average", "det_a_rp", *table.avg_det_a_rp, rp_a_sum / n, 0.1);
  if (table.avg_corr_rp)
    check.cell("average", "corr_rp", *table.avg_corr_rp, rp_corr_sum / n, 0.1);
  if (table.avg_det_b_rp && has_b)
    check.cell("average", "det_b_rp", *table.avg_det_b_rp, rp_b_sum / n, 0.1);
  // The printed improvement average is the mean of the printed improvement
  // column (the recomputed improvements average differently because of the
  // flagged cell), so the printed cells are the primitives here.
  if (table.avg_improvement)
    check.cell("average", "improvement", *table.avg_improvement,
               imp_printed_sum / n, 0.1);
  return report;
}

} // namespace mound
