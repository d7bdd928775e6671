#include "mound/features.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mound/errors.hpp"

namespace mound {
namespace {

std::string format_shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

double parse_cell_double(const std::string& cell, int line_no, const char* field) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [p, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ParseError(std::string("bad ") + field + " value '" + cell + "'", line_no);
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

} // namespace

std::array<double, kFeatureDim> BlockFeatureVector::values() const {
  if (!ft_density)
    throw ValidationError("block '" + block_id +
                          "': ft_density is absent; vector is incomplete");
  return {det_count, det_density, *ft_density, area_ha};
}

BlockFeatureVector extract_features(const OrthomosaicMeta& meta,
                                    const PatchGrid& grid,
                                    const CountSummary& counts,
                                    const AnnotationSet& ft_annotations) {
  validate_meta(meta);
  if (grid.patch_count() < 1)
    throw ValidationError("block '" + meta.id + "': grid has no patches");
  BlockFeatureVector f;
  f.block_id = meta.id;
  f.det_count = static_cast<double>(counts.total);
  f.det_density =
      static_cast<double>(counts.total) / static_cast<double>(grid.patch_count());
  if (!ft_annotations.patches.empty())
    f.ft_density = static_cast<double>(ft_annotations.total_count()) /
                   static_cast<double>(ft_annotations.patches.size());
  f.area_ha = meta.area_ha;
  return f;
}

void write_features_csv(const std::vector<BlockFeatureVector>& rows,
                        const std::filesystem::path& path) {
  bool with_gt = false;
  for (const auto& r : rows)
    if (r.gt_count) with_gt = true;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write features CSV: " + path.string());
  out << "block_id,det_count,det_density,ft_density,area_ha";
  if (with_gt) out << ",gt_count";
  out << '\n';
  for (const auto& r : rows) {
    out << r.block_id << ',' << format_shortest(r.det_count) << ','
        << format_shortest(r.det_density) << ','
        << (r.ft_density ? format_shortest(*r.ft_density) : std::string()) << ','
        << format_shortest(r.area_ha);
    if (with_gt) out << ',' << (r.gt_count ? format_shortest(*r.gt_count) : std::string());
    out << '\n';
  }
}

std::vector<BlockFeatureVector> read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open features CSV: " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw DataError("features CSV is empty: " + path.string());
  const auto header = split_csv_line(line);
  const std::vector<std::string> base = {"block_id", "det_count", "det_density",
                                         "ft_density", "area_ha"};
  bool with_gt = false;
  if (header.size() == base.size() + 1 && header.back() == "gt_count")
    with_gt = true;
  else if (header.size() != base.size())
    throw DataError("unexpected features CSV header in " + path.string());
  for (std::size_t i = 0; i < base.size(); ++i)
    if (header[i] != base[i])
      throw DataError("unexpected features CSV header in " + path.string());

  std::vector<BlockFeatureVector> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " cells, got " +
                           std::to_string(cells.size()),
                       line_no);
    BlockFeatureVector f;
    f.block_id = cells[0];
    if (f.block_id.empty()) throw ParseError("empty block_id", line_no);
    f.det_count = parse_cell_double(cells[1], line_no, "det_count");
    f.det_density = parse_cell_double(cells[2], line_no, "det_density");
    if (!cells[3].empty())
      f.ft_density = parse_cell_double(cells[3], line_no, "ft_density");
    f.area_ha = parse_cell_double(cells[4], line_no, "area_ha");
    if (with_gt && !cells[5].empty())
      f.gt_count = parse_cell_double(cells[5], line_no, "gt_count");
    rows.push_back(std::move(f));
  }
  return rows;
}

} // namespace mound
