#include "clml/data.hpp"

#include "clml/error.hpp"
#include "clml/seed.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

namespace clml {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front()) {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = t.data();
  const char* end = t.data() + t.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

// Splits on commas outside single or double quotes.
std::vector<std::string> split_fields(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  char quote = 0;
  for (char ch : line) {
    if (quote) {
      cur += ch;
      if (ch == quote) quote = 0;
    } else if (ch == '\'' || ch == '"') {
      quote = ch;
      cur += ch;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

[[noreturn]] void parse_error(const std::filesystem::path& path, std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << path.string() << ":" << line << ": " << what;
  fail(ErrorKind::Parse, msg.str());
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

// --- ARFF ---------------------------------------------------------------

struct Attribute {
  std::string name;
  bool nominal = false;
  std::vector<std::string> values;  // nominal values in declaration order
};

// Reads "name type" after @attribute; the name may be quoted.
Attribute parse_attribute(std::string_view rest, const std::filesystem::path& path, std::size_t line) {
  std::string body = trim(rest);
  Attribute attr;
  std::size_t pos = 0;
  if (!body.empty() && (body[0] == '\'' || body[0] == '"')) {
    const auto close = body.find(body[0], 1);
    if (close == std::string::npos) parse_error(path, line, "unterminated attribute name");
    attr.name = body.substr(1, close - 1);
    pos = close + 1;
  } else {
    pos = body.find_first_of(" \t");
    if (pos == std::string::npos) parse_error(path, line, "attribute declaration without a type");
    attr.name = body.substr(0, pos);
  }
  const std::string type = trim(std::string_view(body).substr(pos));
  if (type.empty()) parse_error(path, line, "attribute '" + attr.name + "' has no type");
  if (type.front() == '{') {
    const auto close = type.rfind('}');
    if (close == std::string::npos) parse_error(path, line, "unterminated nominal list for '" + attr.name + "'");
    attr.nominal = true;
    for (auto& v : split_fields(std::string_view(type).substr(1, close - 1))) attr.values.push_back(unquote(v));
    return attr;
  }
  const std::string kind = lower(type.substr(0, type.find_first_of(" \t")));
  if (kind == "numeric" || kind == "real" || kind == "integer") return attr;
  parse_error(path, line, "attribute '" + attr.name + "' has unsupported type '" + type + "'");
}

bool is_binary_label(const Attribute& a) {
  if (!a.nominal || a.values.size() != 2) return false;
  return (a.values[0] == "0" && a.values[1] == "1") || (a.values[0] == "1" && a.values[1] == "0");
}

}  // namespace

Dataset load_arff(const std::filesystem::path& path, std::size_t label_count, LabelPosition labels_at) {
  std::ifstream in = open_input(path);
  std::vector<Attribute> attrs;
  std::string relation = path.stem().string();
  std::string raw;
  std::size_t line_no = 0;
  bool in_data = false;

  // Parsed cell values; NaN marks a missing entry.
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;

  std::size_t n_attr = 0;
  std::size_t label_begin = 0;
  auto is_label = [&](std::size_t a) { return a >= label_begin && a < label_begin + label_count; };

  auto cell_value = [&](std::size_t a, const std::string& token, std::size_t line) -> double {
    const std::string t = unquote(trim(token));
    if (t == "?") {
      if (is_label(a)) parse_error(path, line, "missing value for label attribute '" + attrs[a].name + "'");
      return std::numeric_limits<double>::quiet_NaN();
    }
    const Attribute& attr = attrs[a];
    if (is_label(a)) {
      if (t == "0") return 0.0;
      if (t == "1") return 1.0;
      parse_error(path, line, "label attribute '" + attr.name + "' has non-binary value '" + t + "'");
    }
    if (attr.nominal) {
      const auto it = std::find(attr.values.begin(), attr.values.end(), t);
      if (it == attr.values.end()) {
        parse_error(path, line, "value '" + t + "' not declared for attribute '" + attr.name + "'");
      }
      return static_cast<double>(it - attr.values.begin());
    }
    const auto v = parse_number(t);
    if (!v) parse_error(path, line, "attribute '" + attr.name + "' expects a number, got '" + t + "'");
    return *v;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '%') continue;

    if (!in_data) {
      if (line[0] != '@') parse_error(path, line_no, "expected a header declaration");
      const auto space = line.find_first_of(" \t");
      const std::string keyword = lower(line.substr(0, space));
      const std::string_view rest = space == std::string::npos ? std::string_view{} : std::string_view(line).substr(space);
      if (keyword == "@relation") {
        relation = unquote(trim(rest));
      } else if (keyword == "@attribute") {
        attrs.push_back(parse_attribute(rest, path, line_no));
      } else if (keyword == "@data") {
        n_attr = attrs.size();
        if (label_count < 1) parse_error(path, line_no, "label count must be >= 1");
        if (label_count >= n_attr) {
          parse_error(path, line_no,
                      "label count " + std::to_string(label_count) + " leaves no features among " +
                          std::to_string(n_attr) + " attributes");
        }
        label_begin = labels_at == LabelPosition::Front ? 0 : n_attr - label_count;
        for (std::size_t a = label_begin; a < label_begin + label_count; ++a) {
          if (!is_binary_label(attrs[a])) {
            parse_error(path, line_no, "label attribute '" + attrs[a].name + "' is not a {0,1} nominal");
          }
        }
        in_data = true;
      } else {
        parse_error(path, line_no, "unknown declaration '" + keyword + "'");
      }
      continue;
    }

    std::vector<double> row(n_attr, 0.0);
    if (line.front() == '{') {
      // Sparse row: omitted entries take the first declared value (index 0) or 0.
      for (std::size_t a = 0; a < n_attr; ++a) {
        if (attrs[a].nominal && !is_label(a)) row[a] = 0.0;
        if (is_label(a)) row[a] = attrs[a].values[0] == "1" ? 1.0 : 0.0;
      }
      const auto close = line.rfind('}');
      if (close == std::string::npos) parse_error(path, line_no, "unterminated sparse row");
      const std::string inner = trim(std::string_view(line).substr(1, close - 1));
      if (!inner.empty()) {
        for (const auto& entry : split_fields(inner)) {
          const auto space = entry.find_first_of(" \t");
          if (space == std::string::npos) parse_error(path, line_no, "sparse entry '" + entry + "' lacks a value");
          const auto idx = parse_number(entry.substr(0, space));
          if (!idx || *idx < 0 || *idx >= static_cast<double>(n_attr) || *idx != std::floor(*idx)) {
            parse_error(path, line_no, "bad sparse index in '" + entry + "'");
          }
          const auto a = static_cast<std::size_t>(*idx);
          row[a] = cell_value(a, entry.substr(space + 1), line_no);
        }
      }
    } else {
      const auto fields = split_fields(line);
      if (fields.size() != n_attr) {
        parse_error(path, line_no,
                    "expected " + std::to_string(n_attr) + " values, found " + std::to_string(fields.size()));
      }
      for (std::size_t a = 0; a < n_attr; ++a) row[a] = cell_value(a, fields[a], line_no);
    }
    rows.push_back(std::move(row));
    row_lines.push_back(line_no);
  }

  if (!in_data) parse_error(path, line_no, "no @data section");
  if (rows.empty()) parse_error(path, line_no, "dataset has no rows");

  const std::size_t n = rows.size();
  const std::size_t d = n_attr - label_count;
  Dataset data;
  data.name = relation;
  data.x = Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  BinaryMatrix y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(label_count));

  std::size_t col = 0;
  for (std::size_t a = 0; a < n_attr; ++a) {
    if (is_label(a)) {
      const auto j = static_cast<Eigen::Index>(a - label_begin);
      for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i), j) = rows[i][a] > 0.5 ? 1 : 0;
      continue;
    }
    const bool binary = attrs[a].nominal && attrs[a].values.size() == 2;
    data.feature_kinds.push_back(binary ? FeatureKind::Binary : FeatureKind::Numeric);

    double sum = 0.0;
    std::size_t present = 0;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::isnan(rows[i][a])) continue;
      sum += rows[i][a];
      ones += rows[i][a] > 0.5 ? 1 : 0;
      ++present;
    }
    double fill = 0.0;
    if (present > 0) fill = binary ? (2 * ones > present ? 1.0 : 0.0) : sum / static_cast<double>(present);
    for (std::size_t i = 0; i < n; ++i) {
      double v = rows[i][a];
      if (std::isnan(v)) {
        v = fill;
        ++data.imputed_values;
      }
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col)) = v;
    }
    ++col;
  }
  data.y = LabelMatrix(std::move(y));
  return data;
}

namespace {

struct CsvTable {
  std::vector<std::vector<double>> rows;
  std::size_t columns = 0;
};

CsvTable read_numeric_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  CsvTable table;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    std::vector<double> values;
    values.reserve(fields.size());
    bool numeric = true;
    for (const auto& f : fields) {
      const auto v = parse_number(f);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (first) {
      first = false;
      table.columns = fields.size();
      if (!numeric) continue;  // header row
    }
    if (!numeric) parse_error(path, line_no, "non-numeric field");
    if (values.size() != table.columns) {
      parse_error(path, line_no,
                  "ragged row: " + std::to_string(values.size()) + " fields, expected " +
                      std::to_string(table.columns));
    }
    table.rows.push_back(std::move(values));
  }
  if (table.rows.empty()) fail(ErrorKind::Parse, path.string() + ": dataset is empty (no data rows)");
  return table;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& features_path, const std::filesystem::path& labels_path) {
  const CsvTable fx = read_numeric_csv(features_path);
  const CsvTable fy = read_numeric_csv(labels_path);
  if (fx.rows.size() != fy.rows.size()) {
    fail(ErrorKind::Parse, "row count mismatch: " + features_path.string() + " has " +
                               std::to_string(fx.rows.size()) + " rows, " + labels_path.string() +
                               " has " + std::to_string(fy.rows.size()));
  }
  const auto n = static_cast<Eigen::Index>(fx.rows.size());
  Dataset data;
  data.name = features_path.stem().string();
  data.x = Matrix(n, static_cast<Eigen::Index>(fx.columns));
  BinaryMatrix y(n, static_cast<Eigen::Index>(fy.columns));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& xr = fx.rows[static_cast<std::size_t>(i)];
    const auto& yr = fy.rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < xr.size(); ++j) {
      if (!std::isfinite(xr[j])) fail(ErrorKind::Parse, features_path.string() + ": non-finite feature value");
      data.x(i, static_cast<Eigen::Index>(j)) = xr[j];
    }
    for (std::size_t j = 0; j < yr.size(); ++j) {
      if (yr[j] != 0.0 && yr[j] != 1.0) {
        std::ostringstream msg;
        msg << labels_path.string() << ": row " << i + 1 << " label " << j << " is " << yr[j]
            << ", expected 0 or 1";
        fail(ErrorKind::Parse, msg.str());
      }
      y(i, static_cast<Eigen::Index>(j)) = static_cast<std::uint8_t>(yr[j]);
    }
  }
  data.feature_kinds.assign(fx.columns, FeatureKind::Numeric);
  data.y = LabelMatrix(std::move(y));
  return data;
}

void write_csv(const Dataset& data, const std::filesystem::path& features_path,
               const std::filesystem::path& labels_path) {
  std::ofstream fx(features_path);
  std::ofstream fy(labels_path);
  if (!fx || !fy) fail(ErrorKind::Io, "cannot write dataset CSV files");
  fx.precision(17);
  for (std::size_t j = 0; j < data.d(); ++j) fx << (j ? "," : "") << "x" << j;
  fx << "\n";
  for (std::size_t j = 0; j < data.k(); ++j) fy << (j ? "," : "") << "y" << j;
  fy << "\n";
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) fx << (j ? "," : "") << data.x(i, j);
    fx << "\n";
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) fy << (j ? "," : "") << int(data.y(i, j));
    fy << "\n";
  }
  if (!fx || !fy) fail(ErrorKind::Io, "failed writing dataset CSV files");
}

std::string expand_env(const std::string& text) {
  std::string out;
  for (std::size_t i = 0; i < text.size();) {
    if (text[i] == '$' && i + 1 < text.size() && text[i + 1] == '{') {
      const auto close = text.find('}', i + 2);
      if (close != std::string::npos) {
        const std::string var = text.substr(i + 2, close - i - 2);
        if (const char* v = std::getenv(var.c_str())) out += v;
        i = close + 1;
        continue;
      }
    }
    out += text[i++];
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path resolved(expand_env(p));
    return resolved.is_relative() ? base / resolved : resolved;
  };

  Manifest m;
  try {
    m.name = j.value("name", path.stem().string());
    if (j.contains("arff_path")) {
      m.arff_path = resolve(j.at("arff_path").get<std::string>());
      m.label_count = j.at("label_count").get<std::size_t>();
      const std::string at = lower(j.value("labels_at", std::string("back")));
      if (at != "front" && at != "back") fail(ErrorKind::Parse, path.string() + ": labels_at must be 'front' or 'back'");
      m.labels_at = at == "front" ? LabelPosition::Front : LabelPosition::Back;
    } else if (j.contains("csv_paths")) {
      const auto& c = j.at("csv_paths");
      if (c.is_array()) {
        m.features_path = resolve(c.at(0).get<std::string>());
        m.labels_path = resolve(c.at(1).get<std::string>());
      } else {
        m.features_path = resolve(c.at("features").get<std::string>());
        m.labels_path = resolve(c.at("labels").get<std::string>());
      }
    } else {
      fail(ErrorKind::Parse, path.string() + ": manifest needs 'arff_path' or 'csv_paths'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Parse, path.string() + ": " + e.what());
  }
  return m;
}

Dataset load_dataset(const Manifest& manifest) {
  Dataset data = manifest.is_arff() ? load_arff(manifest.arff_path, manifest.label_count, manifest.labels_at)
                                    : load_csv(manifest.features_path, manifest.labels_path);
  if (!manifest.name.empty()) data.name = manifest.name;
  return data;
}

std::vector<std::vector<std::size_t>> iterative_stratification(const LabelMatrix& labels,
                                                               const std::vector<std::size_t>& rows,
                                                               const std::vector<double>& proportions,
                                                               std::uint64_t seed) {
  const std::size_t folds = proportions.size();
  const std::size_t k = static_cast<std::size_t>(labels.cols());
  std::mt19937_64 rng(seed);

  // Seed-derived visiting order.
  std::vector<std::size_t> order = rows;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<double> capacity(folds);
  for (std::size_t f = 0; f < folds; ++f) capacity[f] = proportions[f] * static_cast<double>(rows.size());

  std::vector<std::vector<double>> label_capacity(k, std::vector<double>(folds));
  std::vector<std::size_t> remaining(k, 0);
  for (std::size_t r : order) {
    for (std::size_t l = 0; l < k; ++l) remaining[l] += labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l));
  }
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t f = 0; f < folds; ++f) label_capacity[l][f] = proportions[f] * static_cast<double>(remaining[l]);
  }

  std::vector<std::vector<std::size_t>> out(folds);
  std::vector<bool> assigned(order.size(), false);

  auto pick = [&](std::vector<std::size_t> candidates) {
    if (candidates.size() == 1) return candidates[0];
    std::uniform_int_distribution<std::size_t> u(0, candidates.size() - 1);
    return candidates[u(rng)];
  };
  auto assign = [&](std::size_t pos, std::size_t fold) {
    const std::size_t r = order[pos];
    assigned[pos] = true;
    out[fold].push_back(r);
    capacity[fold] -= 1.0;
    for (std::size_t l = 0; l < k; ++l) {
      if (labels(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(l))) {
        label_capacity[l][fold] -= 1.0;
        --remaining[l];
      }
    }
  };

  for (;;) {
    // Rarest label among unassigned rows; ties by label index.
    std::size_t label = k;
    for (std::size_t l = 0; l < k; ++l) {
      if (remaining[l] > 0 && (label == k || remaining[l] < remaining[label])) label = l;
    }
    if (label == k) break;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      if (assigned[pos] || !labels(static_cast<Eigen::Index>(order[pos]), static_cast<Eigen::Index>(label))) continue;
      std::vector<std::size_t> best;
      for (std::size_t f = 0; f < folds; ++f) {
        if (best.empty()) {
          best.push_back(f);
          continue;
        }
        const std::size_t b = best[0];
        const double lf = label_capacity[label][f];
        const double lb = label_capacity[label][b];
        if (lf > lb || (lf == lb && capacity[f] > capacity[b])) {
          best.assign(1, f);
        } else if (lf == lb && capacity[f] == capacity[b]) {
          best.push_back(f);
        }
      }
      assign(pos, pick(best));
    }
  }

  // Rows without any positive label fill the remaining capacity.
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (assigned[pos]) continue;
    std::vector<std::size_t> best;
    for (std::size_t f = 0; f < folds; ++f) {
      if (best.empty() || capacity[f] > capacity[best[0]]) {
        best.assign(1, f);
      } else if (capacity[f] == capacity[best[0]]) {
        best.push_back(f);
      }
    }
    assign(pos, pick(best));
  }

  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

SplitIndices stratified_split(const Dataset& data, std::uint64_t seed) {
  if (data.n() < kMinSplitSamples) {
    fail(ErrorKind::Config, "stratified split needs at least " + std::to_string(kMinSplitSamples) +
                                " samples, dataset has " + std::to_string(data.n()));
  }
  std::vector<std::size_t> all(data.n());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto outer = iterative_stratification(data.y, all, {kTestFraction, 1.0 - kTestFraction},
                                        derive_seed(seed, "test"));
  auto inner = iterative_stratification(data.y, outer[1], {kValidationFraction, 1.0 - kValidationFraction},
                                        derive_seed(seed, "validation"));
  return {std::move(inner[1]), std::move(inner[0]), std::move(outer[0])};
}

Dataset normalize(const Dataset& data, const std::vector<std::size_t>& train_rows) {
  Dataset out = data;
  for (std::size_t j = 0; j < data.d(); ++j) {
    if (j < data.feature_kinds.size() && data.feature_kinds[j] == FeatureKind::Binary) continue;
    const auto col = static_cast<Eigen::Index>(j);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t r : train_rows) {
      const double v = data.x(static_cast<Eigen::Index>(r), col);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double range = hi - lo;
    if (!(range > 0.0)) {
      out.x.col(col).setZero();
      continue;
    }
    out.x.col(col) = ((data.x.col(col).array() - lo) / range).cwiseMax(0.0).cwiseMin(1.0).matrix();
  }
  return out;
}

SplitData select_rows(const Dataset& data, const std::vector<std::size_t>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix x(n, data.x.cols());
  BinaryMatrix y(n, data.y.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    x.row(i) = data.x.row(r);
    y.row(i) = data.y.values().row(r);
  }
  SplitData out;
  out.x = std::move(x);
  if (n > 0) out.y = LabelMatrix(std::move(y));
  return out;
}

PreparedData prepare(const Dataset& data, const SplitIndices& split) {
  const Dataset scaled = normalize(data, split.train);
  return {select_rows(scaled, split.train), select_rows(scaled, split.validation),
          select_rows(scaled, split.test)};
}

DatasetStats compute_stats(const Dataset& data) {
  DatasetStats s;
  s.n = data.n();
  s.d = data.d();
  s.k = data.k();
  s.dk = s.d * s.k;
  s.cardinality = s.n ? static_cast<double>(data.y.positives()) / static_cast<double>(s.n) : 0.0;
  s.dispersion = s.cardinality > 0.0 ? static_cast<double>(s.dk) / s.cardinality : 0.0;
  s.interaction = static_cast<double>(s.d) * s.cardinality;
  return s;
}

}  // namespace clml
