#include "mound/labels.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mound/errors.hpp"

namespace mound {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_double(std::string_view tok, int line_no, const char* field) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ParseError(std::string("bad ") + field + " value '" + std::string(tok) + "'",
                     line_no);
  return v;
}

int parse_class(std::string_view tok, int line_no) {
  int v = 0;
  const auto* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end)
    throw ParseError("bad class id '" + std::string(tok) + "'", line_no);
  if (v != kMoundClassId)
    throw ValidationError("unexpected class id " + std::to_string(v) + " (line " +
                          std::to_string(line_no) + ")");
  return v;
}

void check_unit_range(double v, int line_no, const char* field, bool positive) {
  if (!(v >= 0.0) || !(v <= 1.0))
    throw ValidationError(std::string(field) + " = " + std::to_string(v) +
                          " outside [0,1] (line " + std::to_string(line_no) + ")");
  if (positive && v == 0.0)
    throw ValidationError(std::string(field) + " must be > 0 (line " +
                          std::to_string(line_no) + ")");
}

BoundingBox box_from_tokens(const std::vector<std::string_view>& t, int line_no,
                            const PatchRef& patch) {
  const double cx = parse_double(t[1], line_no, "cx");
  const double cy = parse_double(t[2], line_no, "cy");
  const double w = parse_double(t[3], line_no, "w");
  const double h = parse_double(t[4], line_no, "h");
  check_unit_range(cx, line_no, "cx", false);
  check_unit_range(cy, line_no, "cy", false);
  check_unit_range(w, line_no, "w", true);
  check_unit_range(h, line_no, "h", true);
  return BoundingBox{cx * static_cast<double>(patch.w),
                     cy * static_cast<double>(patch.h),
                     w * static_cast<double>(patch.w),
                     h * static_cast<double>(patch.h)};
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos
                                                 ? text.size() - pos
                                                 : nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) fn(line, line_no);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

std::string format_shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

// Normalized value n whose denormalization fl(n * scale) recovers `value`
// whenever such an n exists; fl(value / scale) starts within a couple of
// ulps of it, so a short directed walk finds it. When no representable n
// reaches `value` (the product map can step over a rounding window), the
// walk stops next to it and the reader lands one ulp away — and since that
// neighbour is itself a product, every later write/read cycle is identity.
double exact_norm(double value, double scale) {
  double n = value / scale;
  for (int i = 0; i < 4 && n * scale != value; ++i)
    n = std::nextafter(n, n * scale < value ? 2.0 : -1.0);
  return n;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open label file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

std::int64_t AnnotationSet::total_count() const {
  std::int64_t n = 0;
  for (const auto& [key, boxes] : patches) n += static_cast<std::int64_t>(boxes.size());
  return n;
}

std::string label_filename(std::string_view block_id, std::int64_t row,
                           std::int64_t col) {
  std::string name(block_id);
  name += '_';
  name += std::to_string(row);
  name += '_';
  name += std::to_string(col);
  name += ".txt";
  return name;
}

std::vector<BoundingBox> parse_ground_truth(std::string_view text,
                                            const PatchRef& patch) {
  std::vector<BoundingBox> boxes;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto tokens = split_ws(line);
    if (tokens.size() != 5)
      throw ParseError("expected 5 fields (class cx cy w h), got " +
                           std::to_string(tokens.size()),
                       line_no);
    parse_class(tokens[0], line_no);
    boxes.push_back(box_from_tokens(tokens, line_no, patch));
  });
  return boxes;
}

std::vector<DetectionRecord> parse_detections(std::string_view text,
                                              const PatchRef& patch) {
  std::vector<DetectionRecord> records;
  for_each_line(text, [&](std::string_view line, int line_no) {
    const auto tokens = split_ws(line);
    if (tokens.size() != 6)
      throw ParseError("expected 6 fields (class cx cy w h conf), got " +
                           std::to_string(tokens.size()),
                       line_no);
    DetectionRecord rec;
    rec.class_id = parse_class(tokens[0], line_no);
    rec.box = box_from_tokens(tokens, line_no, patch);
    rec.confidence = parse_double(tokens[5], line_no, "conf");
    check_unit_range(rec.confidence, line_no, "conf", false);
    records.push_back(rec);
  });
  return records;
}

namespace {

void format_box_fields(std::ostringstream& out, const BoundingBox& box,
                       const PatchRef& patch) {
  const double pw = static_cast<double>(patch.w);
  const double ph = static_cast<double>(patch.h);
  const double cx = exact_norm(box.cx, pw);
  const double cy = exact_norm(box.cy, ph);
  const double w = exact_norm(box.w, pw);
  const double h = exact_norm(box.h, ph);
  for (double v : {cx, cy, w, h}) {
    if (!(v >= 0.0) || !(v <= 1.0))
      throw ValidationError("box does not fit its patch when normalized (" +
                            format_shortest(v) + ")");
  }
  out << ' ' << format_shortest(cx) << ' ' << format_shortest(cy) << ' '
      << format_shortest(w) << ' ' << format_shortest(h);
}

} // namespace

std::string format_ground_truth(const std::vector<BoundingBox>& boxes,
                                const PatchRef& patch) {
  std::ostringstream out;
  for (const auto& box : boxes) {
    out << kMoundClassId;
    format_box_fields(out, box, patch);
    out << '\n';
  }
  return out.str();
}

std::string format_detections(const std::vector<DetectionRecord>& records,
                              const PatchRef& patch) {
  std::ostringstream out;
  for (const auto& rec : records) {
    out << rec.class_id;
    format_box_fields(out, rec.box, patch);
    out << ' ' << format_shortest(rec.confidence) << '\n';
  }
  return out.str();
}

std::vector<BoundingBox> load_ground_truth_file(const std::filesystem::path& path,
                                                const PatchRef& patch) {
  return parse_ground_truth(read_file(path), patch);
}

std::vector<DetectionRecord> load_detections_file(const std::filesystem::path& path,
                                                  const PatchRef& patch) {
  return parse_detections(read_file(path), patch);
}

AnnotationSet load_annotation_dir(const std::filesystem::path& dir,
                                  std::string_view block_id, const PatchGrid& grid) {
  AnnotationSet set;
  set.block_id = std::string(block_id);
  for (const auto& patch : all_patches(grid)) {
    const auto path = dir / label_filename(block_id, patch.row, patch.col);
    if (!std::filesystem::exists(path)) continue;
    set.patches[{patch.row, patch.col}] = load_ground_truth_file(path, patch);
  }
  return set;
}

void save_annotation_dir(const AnnotationSet& set, const PatchGrid& grid,
                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [key, boxes] : set.patches) {
    const auto patch = patch_at(grid, key.row, key.col);
    const auto path = dir / label_filename(set.block_id, key.row, key.col);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write label file: " + path.string());
    out << format_ground_truth(boxes, patch);
  }
}

BoundingBox to_mosaic_frame(const BoundingBox& box, const PatchRef& patch) {
  return BoundingBox{box.cx + static_cast<double>(patch.origin_x),
                     box.cy + static_cast<double>(patch.origin_y), box.w, box.h};
}

std::vector<BoundingBox> to_mosaic_frame(const AnnotationSet& set,
                                         const PatchGrid& grid) {
  std::vector<BoundingBox> out;
  for (const auto& [key, boxes] : set.patches) {
    const auto patch = patch_at(grid, key.row, key.col);
    for (const auto& box : boxes) out.push_back(to_mosaic_frame(box, patch));
  }
  return out;
}

} // namespace mound
