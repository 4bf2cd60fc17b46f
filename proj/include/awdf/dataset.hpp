#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "awdf/matrix.hpp"

namespace awdf {

/// Raised for malformed input files. The message names the offending
/// row/column where one exists.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tabular classification data: n rows of m real features plus a dense
/// integer label in [0, class_count).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int class_count = 0;
  std::vector<std::string> feature_names;
  /// class_names[c] is the original label text of encoded class c.
  std::vector<std::string> class_names;
  std::string name;

  std::size_t size() const { return labels.size(); }
  std::size_t arity() const { return features.cols(); }

  /// Throws std::invalid_argument when an invariant is broken: labels out of
  /// range, an empty class, non-finite values, or n < C.
  void validate() const;

  std::vector<std::size_t> class_counts() const;

  /// Rows in the given order; class coding and metadata are kept, so a subset
  /// may legitimately miss some classes.
  Dataset subset(std::span<const std::size_t> rows) const;

  std::string decode_label(int id) const { return class_names.at(static_cast<std::size_t>(id)); }
};

/// Which column holds the class label: a header name, a zero-based index
/// (given as digits), or "last".
struct LabelColumn {
  std::string spec = "last";
};

struct CsvOptions {
  LabelColumn label_column;
  bool has_header = true;
  /// Dataset name; defaults to the file stem.
  std::string name;
};

/// Reads a comma-separated file. Numeric columns are parsed as doubles; any
/// column holding a non-numeric cell is ordinally encoded (distinct strings
/// sorted lexicographically). Labels are coded 0..C-1 in first-appearance
/// order. Empty cells and "?" are treated as missing and rejected.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Same as load_csv but reads from an in-memory string.
Dataset parse_csv(const std::string& text, const CsvOptions& options = {});

struct SplitPair {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  bool stratified = true;
};

/// Row-index partition behind stratified_split. Train gets round(fraction*n)
/// rows distributed over classes by largest remainder, keeping at least one
/// row of every class on each side; falls back to a plain shuffle when a
/// class has fewer than two instances.
struct RowPartition {
  std::vector<std::size_t> first;
  std::vector<std::size_t> second;
  bool stratified = true;
};
RowPartition stratified_partition(std::span<const int> labels, int class_count, double fraction,
                                  std::uint64_t seed);

SplitPair stratified_split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Assigns each row a fold id in [0, k), stratified by class. Every fold is
/// nonempty when k <= labels.size().
std::vector<std::size_t> stratified_folds(std::span<const int> labels, int class_count, std::size_t k,
                                          std::uint64_t seed);

}  // namespace awdf
