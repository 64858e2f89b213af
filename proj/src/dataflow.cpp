#include "sparsebench/dataflow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace sparsebench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc() || ptr != end) return false;
  return std::isfinite(out);
}

// Splits one CSV record, honoring double-quoted fields.
std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

bool is_missing_cell(const FlowTable& t, std::size_t c, std::size_t r) {
  if (t.text[c]) return (*t.text[c])[r].empty();
  return std::isnan(t.numeric[c][r]);
}

}  // namespace

std::size_t FlowTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw MissingColumnError("column '" + name + "' not found");
}

void FlowTable::validate() const {
  if (numeric.size() != columns.size() || text.size() != columns.size()) {
    throw ShapeError("flow table column storage is inconsistent");
  }
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (!seen.insert(c).second) throw ValueError("duplicate column name '" + c + "'");
  }
  const std::size_t n = row_count();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (numeric[c].size() != n) throw ShapeError("column '" + columns[c] + "' has wrong row count");
    if (text[c] && text[c]->size() != n) {
      throw ShapeError("text column '" + columns[c] + "' has wrong row count");
    }
  }
  for (std::size_t r = 1; r < order_key.size(); ++r) {
    if (order_key[r] <= order_key[r - 1]) throw ValueError("order_key is not strictly increasing");
  }
  if (!coarse_labels.empty() && coarse_labels.size() != n) {
    throw ShapeError("coarse label count does not match row count");
  }
}

LabelMapping LabelMapping::from_names(const std::map<std::string, std::string>& detailed_to_name) {
  LabelMapping m;
  const auto& names = coarse_class_names();
  for (const auto& [detailed, coarse] : detailed_to_name) {
    auto it = std::find(names.begin(), names.end(), coarse);
    if (it == names.end()) {
      throw ValueError("unknown coarse class '" + coarse + "' (expected Benign/Recon/DoS)");
    }
    m.to_class[detailed] = static_cast<int>(it - names.begin());
  }
  return m;
}

int LabelMapping::map(const std::string& detailed) const {
  auto it = to_class.find(detailed);
  if (it == to_class.end()) throw UnmappedLabelError("unmapped label '" + detailed + "'");
  return it->second;
}

FlowTable load_csv(const std::string& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path + "' is empty, expected a header row");
  std::vector<std::string> header = split_csv_record(line);
  for (auto& h : header) h = trim(h);

  std::size_t label_idx = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) {
      label_idx = i;
      break;
    }
  }
  if (label_idx == header.size()) {
    throw MissingColumnError("label column '" + label_column + "' not in header of '" + path + "'");
  }

  std::vector<std::vector<std::string>> cells_by_col(header.size());
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_record(line);
    if (cells.size() != header.size()) {
      throw RaggedRowError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(header.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) cells_by_col[c].push_back(trim(cells[c]));
    ++row;
  }

  FlowTable t;
  t.raw_labels = std::move(cells_by_col[label_idx]);
  t.order_key.resize(row);
  std::iota(t.order_key.begin(), t.order_key.end(), 0);

  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_idx) continue;
    auto& raw = cells_by_col[c];
    std::vector<double> parsed(row, kNaN);
    std::size_t non_empty = 0, numeric_ok = 0;
    for (std::size_t r = 0; r < row; ++r) {
      if (raw[r].empty()) continue;
      ++non_empty;
      double v;
      if (parse_double(raw[r], v)) {
        parsed[r] = v;
        ++numeric_ok;
      }
    }
    t.columns.push_back(header[c]);
    // Mostly-numeric columns become numeric with unparseable cells missing;
    // otherwise the raw strings are kept for later label encoding.
    if (non_empty == 0 || numeric_ok * 2 >= non_empty) {
      t.numeric.push_back(std::move(parsed));
      t.text.emplace_back(std::nullopt);
    } else {
      t.numeric.emplace_back(row, kNaN);
      t.text.emplace_back(std::move(raw));
    }
  }
  t.validate();
  return t;
}

void write_csv(const FlowTable& t, const std::string& path, const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < t.columns.size(); ++c) {
    out << csv_escape(t.columns[c]) << ',';
  }
  out << csv_escape(label_column) << '\n';
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    for (std::size_t c = 0; c < t.col_count(); ++c) {
      if (t.text[c]) {
        out << csv_escape((*t.text[c])[r]);
      } else if (!std::isnan(t.numeric[c][r])) {
        out << format_double(t.numeric[c][r]);
      }
      out << ',';
    }
    out << csv_escape(t.raw_labels[r]) << '\n';
  }
  if (!out) throw FileError("failed writing '" + path + "'");
}

FlowTable map_labels(FlowTable t, const LabelMapping& m) {
  t.coarse_labels.resize(t.row_count());
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    t.coarse_labels[r] = m.map(t.raw_labels[r]);
  }
  return t;
}

FlowTable drop_degenerate(FlowTable t, double missing_threshold) {
  if (t.row_count() == 0 || t.col_count() == 0) {
    throw ValueError("drop_degenerate requires a non-empty table");
  }
  const std::size_t n = t.row_count();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    std::size_t missing = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (is_missing_cell(t, c, r)) ++missing;
    }
    const double frac = static_cast<double>(missing) / static_cast<double>(n);
    if (frac > missing_threshold) continue;
    if (missing == n) continue;  // nothing observed at all

    bool constant = true;
    if (t.text[c]) {
      const std::string* first = nullptr;
      for (std::size_t r = 0; r < n && constant; ++r) {
        const std::string& s = (*t.text[c])[r];
        if (s.empty()) continue;
        if (!first) first = &s;
        else if (*first != s) constant = false;
      }
    } else {
      double first = kNaN;
      for (std::size_t r = 0; r < n && constant; ++r) {
        const double v = t.numeric[c][r];
        if (std::isnan(v)) continue;
        if (std::isnan(first)) first = v;
        else if (first != v) constant = false;
      }
    }
    if (constant) continue;
    keep.push_back(c);
  }
  if (keep.empty()) throw ValueError("drop_degenerate removed every column");

  FlowTable out;
  out.raw_labels = std::move(t.raw_labels);
  out.coarse_labels = std::move(t.coarse_labels);
  out.order_key = std::move(t.order_key);
  for (std::size_t c : keep) {
    out.columns.push_back(std::move(t.columns[c]));
    out.text.push_back(std::move(t.text[c]));
    auto& col = t.numeric[c];
    if (!out.text.back()) {
      // median imputation for residual missing cells
      std::vector<double> present;
      present.reserve(n);
      for (double v : col) {
        if (!std::isnan(v)) present.push_back(v);
      }
      if (present.size() < n) {
        std::sort(present.begin(), present.end());
        const std::size_t m = present.size();
        const double median =
            (m % 2 == 1) ? present[m / 2] : 0.5 * (present[m / 2 - 1] + present[m / 2]);
        for (double& v : col) {
          if (std::isnan(v)) v = median;
        }
      }
    }
    out.numeric.push_back(std::move(col));
  }
  return out;
}

FlowTable encode_nominal(FlowTable t, const std::vector<std::string>& nominal_columns) {
  for (const auto& name : nominal_columns) {
    const std::size_t c = t.column_index(name);
    std::set<std::string> distinct;
    if (t.text[c]) {
      for (const auto& s : *t.text[c]) distinct.insert(s);
    } else {
      for (double v : t.numeric[c]) {
        if (!std::isnan(v)) distinct.insert(format_double(v));
      }
    }
    std::map<std::string, double> code;
    double next = 0.0;
    for (const auto& s : distinct) code[s] = next++;  // lexicographic order

    std::vector<double> encoded(t.row_count(), kNaN);
    if (t.text[c]) {
      for (std::size_t r = 0; r < t.row_count(); ++r) encoded[r] = code[(*t.text[c])[r]];
      t.text[c].reset();
    } else {
      for (std::size_t r = 0; r < t.row_count(); ++r) {
        const double v = t.numeric[c][r];
        if (!std::isnan(v)) encoded[r] = code[format_double(v)];
      }
    }
    t.numeric[c] = std::move(encoded);
  }
  return t;
}

namespace {

struct ColumnStats {
  bool has_missing = false;
  double mean = 0.0;
  double sd = 0.0;  // population scale, sqrt of centered sum of squares
};

// Pearson correlation over pairwise-complete observations.
double pearson(const std::vector<double>& a, const std::vector<double>& b,
               const ColumnStats& sa, const ColumnStats& sb) {
  const std::size_t n = a.size();
  if (!sa.has_missing && !sb.has_missing) {
    if (sa.sd == 0.0 || sb.sd == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) acc += (a[r] - sa.mean) * (b[r] - sb.mean);
    return acc / (sa.sd * sb.sd);
  }
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  std::size_t m = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (std::isnan(a[r]) || std::isnan(b[r])) continue;
    sx += a[r];
    sy += b[r];
    sxx += a[r] * a[r];
    syy += b[r] * b[r];
    sxy += a[r] * b[r];
    ++m;
  }
  if (m < 2) return 0.0;
  const double dm = static_cast<double>(m);
  const double vx = sxx - sx * sx / dm;
  const double vy = syy - sy * sy / dm;
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return (sxy - sx * sy / dm) / std::sqrt(vx * vy);
}

}  // namespace

std::pair<FlowTable, std::vector<std::string>> prune_correlated(FlowTable t, double threshold) {
  if (t.row_count() < 2) throw ValueError("correlation needs at least 2 rows");
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    if (t.text[c]) throw ValueError("column '" + t.columns[c] + "' is not numeric");
  }
  const std::size_t ncol = t.col_count();
  std::vector<ColumnStats> stats(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    const auto& col = t.numeric[c];
    double sum = 0.0;
    std::size_t m = 0;
    for (double v : col) {
      if (std::isnan(v)) stats[c].has_missing = true;
      else {
        sum += v;
        ++m;
      }
    }
    if (!stats[c].has_missing && m > 0) {
      stats[c].mean = sum / static_cast<double>(m);
      double ss = 0.0;
      for (double v : col) ss += (v - stats[c].mean) * (v - stats[c].mean);
      stats[c].sd = std::sqrt(ss);
    }
  }

  struct Pair {
    std::size_t a, b;
  };
  std::vector<Pair> flagged;
  std::vector<std::size_t> occurrences(ncol, 0);
  for (std::size_t a = 0; a + 1 < ncol; ++a) {
    for (std::size_t b = a + 1; b < ncol; ++b) {
      const double rho = pearson(t.numeric[a], t.numeric[b], stats[a], stats[b]);
      if (std::fabs(rho) > threshold) {
        flagged.push_back({a, b});
        ++occurrences[a];
        ++occurrences[b];
      }
    }
  }

  std::stable_sort(flagged.begin(), flagged.end(), [&](const Pair& p, const Pair& q) {
    const std::size_t mp = std::max(occurrences[p.a], occurrences[p.b]);
    const std::size_t mq = std::max(occurrences[q.a], occurrences[q.b]);
    if (mp != mq) return mp > mq;
    if (p.a != q.a) return p.a < q.a;
    return p.b < q.b;
  });

  std::vector<bool> removed(ncol, false);
  std::vector<std::string> removed_names;
  for (const Pair& p : flagged) {
    if (removed[p.a] || removed[p.b]) continue;
    std::size_t drop;
    if (occurrences[p.a] > occurrences[p.b]) drop = p.b;
    else if (occurrences[p.b] > occurrences[p.a]) drop = p.a;
    else drop = std::max(p.a, p.b);  // tie: keep the earlier column
    removed[drop] = true;
    removed_names.push_back(t.columns[drop]);
  }

  FlowTable out;
  out.raw_labels = std::move(t.raw_labels);
  out.coarse_labels = std::move(t.coarse_labels);
  out.order_key = std::move(t.order_key);
  for (std::size_t c = 0; c < ncol; ++c) {
    if (removed[c]) continue;
    out.columns.push_back(std::move(t.columns[c]));
    out.numeric.push_back(std::move(t.numeric[c]));
    out.text.push_back(std::move(t.text[c]));
  }
  return {std::move(out), std::move(removed_names)};
}

FlowTable drop_columns(FlowTable t, const std::vector<std::string>& names) {
  const std::set<std::string> doomed(names.begin(), names.end());
  FlowTable out;
  out.raw_labels = std::move(t.raw_labels);
  out.coarse_labels = std::move(t.coarse_labels);
  out.order_key = std::move(t.order_key);
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    if (doomed.count(t.columns[c])) continue;
    out.columns.push_back(std::move(t.columns[c]));
    out.numeric.push_back(std::move(t.numeric[c]));
    out.text.push_back(std::move(t.text[c]));
  }
  return out;
}

Dataset to_dataset(const FlowTable& t) {
  if (!t.has_coarse_labels()) throw ValueError("table has no coarse labels; run map_labels first");
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    if (t.text[c]) throw ValueError("column '" + t.columns[c] + "' is not numeric");
  }
  Dataset d;
  d.feature_names = t.columns;
  d.class_names = coarse_class_names();
  d.labels = t.coarse_labels;
  d.features = Matrix(t.row_count(), t.col_count());
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    for (std::size_t r = 0; r < t.row_count(); ++r) {
      const double v = t.numeric[c][r];
      if (std::isnan(v)) {
        throw NumericError("missing value in column '" + t.columns[c] +
                           "' row " + std::to_string(r) + "; run drop_degenerate first");
      }
      d.features(r, c) = v;
    }
  }
  return d;
}

namespace {

Dataset rows_to_dataset(const FlowTable& t, const std::vector<std::size_t>& rows) {
  Dataset d;
  d.feature_names = t.columns;
  d.class_names = coarse_class_names();
  d.features = Matrix(rows.size(), t.col_count());
  d.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    d.labels.push_back(t.coarse_labels[r]);
    for (std::size_t c = 0; c < t.col_count(); ++c) {
      const double v = t.numeric[c][r];
      if (std::isnan(v)) {
        throw NumericError("missing value in column '" + t.columns[c] + "' row " +
                           std::to_string(r) + "; run drop_degenerate first");
      }
      d.features(i, c) = v;
    }
  }
  return d;
}

}  // namespace

SplitResult split_validation(const FlowTable& t, double frac) {
  if (!t.has_coarse_labels()) throw ValueError("table has no coarse labels; run map_labels first");
  if (frac <= 0.0 || frac >= 1.0) throw ValueError("validation fraction must be in (0, 1)");
  for (std::size_t c = 0; c < t.col_count(); ++c) {
    if (t.text[c]) throw ValueError("column '" + t.columns[c] + "' is not numeric");
  }

  // Group rows by detailed label, preserving chronological order inside each.
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < t.row_count(); ++r) groups[t.raw_labels[r]].push_back(r);

  std::vector<bool> in_val(t.row_count(), false);
  SplitResult result;
  for (const auto& [label, rows] : groups) {
    if (rows.size() < 2) {
      result.warnings.push_back("group '" + label + "' has " + std::to_string(rows.size()) +
                                " row(s); kept entirely in train");
      continue;
    }
    const auto n_val = static_cast<std::size_t>(
        std::ceil(frac * static_cast<double>(rows.size()) - 1e-9));
    for (std::size_t i = rows.size() - n_val; i < rows.size(); ++i) in_val[rows[i]] = true;
  }

  std::vector<std::size_t> train_rows, val_rows;
  for (std::size_t r = 0; r < t.row_count(); ++r) {
    (in_val[r] ? val_rows : train_rows).push_back(r);
  }
  result.train = rows_to_dataset(t, train_rows);
  result.val = rows_to_dataset(t, val_rows);
  return result;
}

const std::vector<std::vector<std::string>>& synth_detailed_labels() {
  static const std::vector<std::vector<std::string>> labels = {
      {"benign-idle", "benign-charging"},
      {"recon-port-scan", "recon-os-scan"},
      {"dos-syn-flood", "dos-slowloris"},
  };
  return labels;
}

FlowTable synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.rows == 0) throw ValueError("generator needs at least 1 row");
  if (spec.signal_count > spec.feature_count) {
    throw ValueError("signal_count exceeds feature_count");
  }
  double prior_sum = 0.0;
  for (double p : spec.priors) {
    if (p < 0.0) throw ValueError("class priors must be non-negative");
    prior_sum += p;
  }
  if (std::fabs(prior_sum - 1.0) > 1e-9) {
    throw ValueError("class priors must sum to 1 (got " + format_double(prior_sum) + ")");
  }

  Rng rng(seed);

  // Exact per-class counts: floor share plus largest-remainder distribution.
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int c = 0; c < kClassCount; ++c) {
    const double exact = spec.priors[c] * static_cast<double>(spec.rows);
    counts[c] = static_cast<std::size_t>(exact);
    remainders[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  while (assigned < spec.rows) {
    int best = 0;
    for (int c = 1; c < kClassCount; ++c) {
      if (remainders[c] > remainders[best]) best = c;
    }
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }

  // Class-dependent means on signal features only.
  Rng mean_rng = rng.fork("means");
  std::array<std::vector<double>, 3> mu;
  for (int c = 0; c < kClassCount; ++c) {
    mu[c].resize(spec.signal_count);
    for (auto& v : mu[c]) v = spec.class_separation * mean_rng.normal();
  }

  // Contiguous same-class runs, shuffled, mimicking per-attack capture files
  // merged in time order.
  struct Run {
    int cls;
    std::size_t len;
    std::size_t seq;  // run index within its class, picks the detailed label
  };
  std::vector<Run> runs;
  const std::size_t run_len = std::max<std::size_t>(1, spec.run_length);
  for (int c = 0; c < kClassCount; ++c) {
    std::size_t left = counts[c], seq = 0;
    while (left > 0) {
      const std::size_t len = std::min(run_len, left);
      runs.push_back({c, len, seq++});
      left -= len;
    }
  }
  Rng run_rng = rng.fork("runs");
  run_rng.shuffle(runs);

  FlowTable t;
  char name[8];
  for (std::size_t j = 0; j < spec.feature_count; ++j) {
    std::snprintf(name, sizeof(name), "f%02zu", j);
    t.columns.emplace_back(name);
  }
  t.numeric.assign(spec.feature_count, std::vector<double>(spec.rows, 0.0));
  t.text.assign(spec.feature_count, std::nullopt);

  Rng cell_rng = rng.fork("cells");
  const auto& detail = synth_detailed_labels();
  std::size_t r = 0;
  for (const Run& run : runs) {
    const auto& labels_for_class = detail[run.cls];
    const std::string& label = labels_for_class[run.seq % labels_for_class.size()];
    for (std::size_t k = 0; k < run.len; ++k, ++r) {
      t.raw_labels.push_back(label);
      for (std::size_t j = 0; j < spec.feature_count; ++j) {
        double v = spec.noise_sigma * cell_rng.normal();
        if (j < spec.signal_count) v += mu[run.cls][j];
        t.numeric[j][r] = v;
      }
    }
  }
  t.order_key.resize(spec.rows);
  std::iota(t.order_key.begin(), t.order_key.end(), 0);

  Rng decoy_rng = rng.fork("decoys");
  if (spec.missing_fraction > 0.0 && spec.signal_count < spec.feature_count) {
    for (std::size_t j = spec.signal_count; j < spec.feature_count; ++j) {
      for (std::size_t i = 0; i < spec.rows; ++i) {
        if (decoy_rng.uniform() < spec.missing_fraction) t.numeric[j][i] = kNaN;
      }
    }
  }
  if (spec.add_constant_column) {
    t.columns.emplace_back("const_col");
    t.numeric.emplace_back(spec.rows, 7.0);
    t.text.emplace_back(std::nullopt);
  }
  if (spec.add_duplicate_column) {
    t.columns.emplace_back("dup_f00");
    t.numeric.push_back(t.numeric[0]);
    t.text.emplace_back(std::nullopt);
  }
  if (spec.add_nominal_column) {
    static const std::vector<std::string> protos = {"dns", "http", "mqtt", "ocpp"};
    std::vector<std::string> cells(spec.rows);
    for (auto& s : cells) s = protos[decoy_rng.index(protos.size())];
    t.columns.emplace_back("app_proto");
    t.numeric.emplace_back(spec.rows, kNaN);
    t.text.emplace_back(std::move(cells));
  }

  t.validate();
  return t;
}

}  // namespace sparsebench
