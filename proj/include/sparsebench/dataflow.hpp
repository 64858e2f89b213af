#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsebench/common.hpp"

namespace sparsebench {

// Coarse classes are fixed: 0=Benign, 1=Recon, 2=DoS.
inline const std::vector<std::string>& coarse_class_names() {
  static const std::vector<std::string> names = {"Benign", "Recon", "DoS"};
  return names;
}
constexpr int kClassCount = 3;

/// Ordered flow-feature table. Column-major storage; missing cells are NaN.
/// Columns that contained non-numeric text keep their raw strings until
/// encode_nominal turns them into integer codes.
struct FlowTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> numeric;  // [col][row], NaN = missing
  std::vector<std::optional<std::vector<std::string>>> text;  // engaged for text columns
  std::vector<std::string> raw_labels;   // detailed label per row
  std::vector<int> coarse_labels;        // filled by map_labels, else empty
  std::vector<std::uint64_t> order_key;  // strictly increasing

  std::size_t row_count() const { return raw_labels.size(); }
  std::size_t col_count() const { return columns.size(); }
  bool has_coarse_labels() const { return !coarse_labels.empty(); }
  std::size_t column_index(const std::string& name) const;  // throws MissingColumnError
  void validate() const;
};

struct Dataset {
  Matrix features;  // rows x features
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t row_count() const { return labels.size(); }
  std::size_t feature_count() const { return features.cols; }
};

/// Total map from detailed label strings to one of the three coarse classes.
struct LabelMapping {
  std::map<std::string, int> to_class;

  static LabelMapping from_names(const std::map<std::string, std::string>& detailed_to_name);
  int map(const std::string& detailed) const;  // throws UnmappedLabelError
};

FlowTable load_csv(const std::string& path, const std::string& label_column);
void write_csv(const FlowTable& t, const std::string& path, const std::string& label_column);

FlowTable map_labels(FlowTable t, const LabelMapping& m);

FlowTable drop_degenerate(FlowTable t, double missing_threshold = 0.99);

FlowTable encode_nominal(FlowTable t, const std::vector<std::string>& nominal_columns);

std::pair<FlowTable, std::vector<std::string>> prune_correlated(FlowTable t,
                                                                double threshold = 0.95);
/// Drops the named columns (no error for names already absent).
FlowTable drop_columns(FlowTable t, const std::vector<std::string>& names);

struct SplitResult {
  Dataset train;
  Dataset val;
  std::vector<std::string> warnings;  // groups too small to split
};

SplitResult split_validation(const FlowTable& t, double frac = 0.2);

/// Converts a fully numeric, label-mapped table into a model-ready dataset.
Dataset to_dataset(const FlowTable& t);

struct SynthSpec {
  std::size_t rows = 10000;
  std::size_t feature_count = 49;
  std::size_t signal_count = 10;
  std::array<double, 3> priors = {0.334, 0.333, 0.333};  // Benign, Recon, DoS
  double class_separation = 2.0;  // scale of class-dependent means on signal features
  double noise_sigma = 1.0;
  std::size_t run_length = 32;  // rows per contiguous same-class burst
  // Optional decoy columns so preprocessing has something to chew on.
  bool add_constant_column = false;
  bool add_duplicate_column = false;
  bool add_nominal_column = false;
  double missing_fraction = 0.0;  // missing cells injected into noise features
};

FlowTable synth_generate(const SynthSpec& spec, std::uint64_t seed);

/// Detailed labels used by the generator, grouped per coarse class.
const std::vector<std::vector<std::string>>& synth_detailed_labels();

}  // namespace sparsebench
