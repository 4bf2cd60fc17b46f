#include "awdf/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "awdf/random.hpp"

namespace awdf {

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// Splits one CSV record. Double quotes may wrap a field; "" inside quotes is
// a literal quote. Records never span lines.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
      was_quoted = true;
    } else if (ch == ',') {
      cells.push_back(was_quoted ? cur : trim(cur));
      cur.clear();
      was_quoted = false;
    } else {
      cur += ch;
    }
  }
  cells.push_back(was_quoted ? cur : trim(cur));
  return cells;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_missing(const std::string& s) { return s.empty() || s == "?"; }

std::size_t resolve_label_column(const LabelColumn& col, const std::vector<std::string>& header,
                                 std::size_t width) {
  const std::string& spec = col.spec;
  if (spec.empty() || spec == "last") return width - 1;
  if (!header.empty()) {
    auto it = std::find(header.begin(), header.end(), spec);
    if (it != header.end()) return static_cast<std::size_t>(it - header.begin());
  }
  std::size_t index = 0;
  const auto [ptr, ec] = std::from_chars(spec.data(), spec.data() + spec.size(), index);
  if (ec != std::errc() || ptr != spec.data() + spec.size())
    throw LoadError("label column '" + spec + "' not found");
  if (index >= width)
    throw LoadError("label column index " + spec + " out of range (" + std::to_string(width) +
                    " columns)");
  return index;
}

}  // namespace

void Dataset::validate() const {
  if (class_count < 2) throw std::invalid_argument("dataset needs at least two classes");
  if (features.rows() != labels.size())
    throw std::invalid_argument("feature rows and label count differ");
  if (labels.size() < static_cast<std::size_t>(class_count))
    throw std::invalid_argument("dataset has fewer rows than classes");
  if (!feature_names.empty() && feature_names.size() != features.cols())
    throw std::invalid_argument("feature_names length differs from column count");
  for (double v : features.data())
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  const auto counts = class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0) throw std::invalid_argument("class " + std::to_string(c) + " has no rows");
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(class_count, 0)), 0);
  for (int y : labels) {
    if (y < 0 || y >= class_count)
      throw std::invalid_argument("label " + std::to_string(y) + " outside [0, C)");
    ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.features = features.select_rows(rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(labels[r]);
  out.class_count = class_count;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.name = name;
  return out;
}

Dataset parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> line_numbers;
  std::vector<std::string> header;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_record(line);
    if (options.has_header && header.empty() && records.empty()) {
      header = std::move(cells);
      continue;
    }
    records.push_back(std::move(cells));
    line_numbers.push_back(line_no);
  }
  if (records.empty()) throw LoadError("no data rows");

  const std::size_t width = header.empty() ? records.front().size() : header.size();
  if (width < 2) throw LoadError("need at least one feature column and a label column");
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].size() != width)
      throw LoadError("line " + std::to_string(line_numbers[i]) + ": expected " +
                      std::to_string(width) + " cells, found " + std::to_string(records[i].size()));

  const std::size_t label_col = resolve_label_column(options.label_column, header, width);
  auto column_name = [&](std::size_t c) {
    return header.empty() ? "column " + std::to_string(c) : "column '" + header[c] + "'";
  };

  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t c = 0; c < width; ++c)
      if (is_missing(records[i][c]))
        throw LoadError("missing value at line " + std::to_string(line_numbers[i]) + ", " +
                        column_name(c));

  Dataset ds;
  const std::size_t n = records.size();
  const std::size_t m = width - 1;
  ds.features = Matrix(n, m);
  std::size_t out_col = 0;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == label_col) continue;
    std::vector<double> values(n);
    bool numeric = true;
    for (std::size_t i = 0; i < n && numeric; ++i) numeric = parse_number(records[i][c], values[i]);
    if (!numeric) {
      std::map<std::string, double> codes;
      for (std::size_t i = 0; i < n; ++i) codes.emplace(records[i][c], 0.0);
      double next = 0.0;
      for (auto& [key, code] : codes) code = next++;
      for (std::size_t i = 0; i < n; ++i) values[i] = codes[records[i][c]];
    }
    for (std::size_t i = 0; i < n; ++i) ds.features(i, out_col) = values[i];
    ds.feature_names.push_back(header.empty() ? "x" + std::to_string(out_col) : header[c]);
    ++out_col;
  }

  std::map<std::string, int> label_codes;
  ds.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& text_label = records[i][label_col];
    auto [it, inserted] = label_codes.emplace(text_label, static_cast<int>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(text_label);
    ds.labels.push_back(it->second);
  }
  ds.class_count = static_cast<int>(ds.class_names.size());
  if (ds.class_count < 2) throw LoadError("label column holds a single class");
  ds.name = options.name;
  try {
    ds.validate();
  } catch (const std::invalid_argument& e) {
    throw LoadError(e.what());
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  CsvOptions opts = options;
  if (opts.name.empty()) opts.name = path.stem().string();
  try {
    return parse_csv(buf.str(), opts);
  } catch (const LoadError& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

RowPartition stratified_partition(std::span<const int> labels, int class_count, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("split fraction must lie in (0, 1)");
  const std::size_t n = labels.size();
  const auto classes = static_cast<std::size_t>(class_count);
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < n; ++i) by_class[static_cast<std::size_t>(labels[i])].push_back(i);

  Rng rng(seed);
  RowPartition out;
  const auto total = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));

  const bool can_stratify = std::all_of(by_class.begin(), by_class.end(),
                                        [](const auto& rows) { return rows.size() >= 2; });
  if (!can_stratify) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::size_t take = std::clamp<std::size_t>(total, 1, n - 1);
    out.first.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(take));
    out.second.assign(perm.begin() + static_cast<std::ptrdiff_t>(take), perm.end());
    out.stratified = false;
  } else {
    // Largest-remainder apportionment of `total` over classes, keeping each
    // class represented on both sides.
    std::vector<std::size_t> quota(classes);
    std::vector<double> remainder(classes);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      const double exact = fraction * static_cast<double>(by_class[c].size());
      quota[c] = std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(exact)), 1,
                                         by_class[c].size() - 1);
      remainder[c] = exact - static_cast<double>(quota[c]);
      assigned += quota[c];
    }
    std::vector<std::size_t> order(classes);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    bool progress = true;
    while (assigned < total && progress) {
      progress = false;
      for (auto c : order) {
        if (assigned == total) break;
        if (quota[c] + 1 < by_class[c].size()) {
          ++quota[c];
          ++assigned;
          progress = true;
        }
      }
    }
    progress = true;
    while (assigned > total && progress) {
      progress = false;
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (assigned == total) break;
        if (quota[*it] > 1) {
          --quota[*it];
          --assigned;
          progress = true;
        }
      }
    }
    for (std::size_t c = 0; c < classes; ++c) {
      auto rows = by_class[c];
      std::shuffle(rows.begin(), rows.end(), rng);
      out.first.insert(out.first.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(quota[c]));
      out.second.insert(out.second.end(), rows.begin() + static_cast<std::ptrdiff_t>(quota[c]), rows.end());
    }
  }
  std::sort(out.first.begin(), out.first.end());
  std::sort(out.second.begin(), out.second.end());
  return out;
}

SplitPair stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto part = stratified_partition(ds.labels, ds.class_count, train_fraction, seed);
  SplitPair out;
  out.train = ds.subset(part.first);
  out.test = ds.subset(part.second);
  out.seed = seed;
  out.train_rows = std::move(part.first);
  out.test_rows = std::move(part.second);
  out.stratified = part.stratified;
  return out;
}

std::vector<std::size_t> stratified_folds(std::span<const int> labels, int class_count, std::size_t k,
                                          std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("fold count must be positive");
  if (k > labels.size()) throw std::invalid_argument("more folds than rows");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(class_count));
  for (std::size_t i = 0; i < labels.size(); ++i)
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> fold(labels.size());
  std::size_t position = 0;
  for (auto& rows : by_class) {
    std::shuffle(rows.begin(), rows.end(), rng);
    for (auto r : rows) fold[r] = position++ % k;
  }
  return fold;
}

}  // namespace awdf
