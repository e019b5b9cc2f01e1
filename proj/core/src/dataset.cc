//
// Copyright 2026 The privmarket Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "privmarket/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>

#include "privmarket/errors.h"

namespace privmarket {
namespace {

// Rows whose norm exceeds 1 by less than this are treated as already inside
// the unit ball, which keeps normalization idempotent.
constexpr double kNormSlack = 1e-12;

std::string_view Trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(Trim(line.substr(start)));
      break;
    }
    fields.push_back(Trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

std::optional<double> ParseNumber(std::string_view field) {
  // strtod accepts "nan"/"inf", which the finiteness check rejects later
  // with a clearer error than a parse failure.
  std::string buffer(field);
  if (buffer.empty()) return std::nullopt;
  char* end = nullptr;
  const double value = std::strtod(buffer.c_str(), &end);
  if (end != buffer.c_str() + buffer.size()) return std::nullopt;
  return value;
}

}  // namespace

Dataset NormalizeDataset(const Matrix& raw_features, const Vector& raw_labels) {
  if (raw_features.rows() < 1 || raw_features.cols() < 1) {
    Fail(ErrorCode::kInvalidData, "dataset needs at least one row and column");
  }
  if (raw_labels.size() != raw_features.rows()) {
    Fail(ErrorCode::kDimensionMismatch, "label count differs from row count");
  }
  for (Eigen::Index i = 0; i < raw_features.rows(); ++i) {
    if (!raw_features.row(i).allFinite()) {
      Fail(ErrorCode::kInvalidData,
           "row " + std::to_string(i) + " contains a non-finite value");
    }
  }

  std::set<double> distinct(raw_labels.data(),
                            raw_labels.data() + raw_labels.size());
  const bool zero_one = std::all_of(distinct.begin(), distinct.end(),
                                    [](double v) { return v == 0.0 || v == 1.0; });
  const bool plus_minus = std::all_of(
      distinct.begin(), distinct.end(),
      [](double v) { return v == -1.0 || v == 1.0; });
  if (distinct.size() > 2 || (!zero_one && !plus_minus)) {
    Fail(ErrorCode::kInvalidLabels,
         "labels must be drawn from {0,1} or {-1,+1}");
  }
  Vector labels = raw_labels;
  if (zero_one && !plus_minus) {
    labels = (2.0 * raw_labels.array() - 1.0).matrix();
  }

  const double max_norm = raw_features.rowwise().norm().maxCoeff();
  const double scale = max_norm > 1.0 + kNormSlack ? max_norm : 1.0;
  Matrix features = raw_features / scale;
  return Dataset(std::move(features), std::move(labels), scale);
}

RawTable ParseDatasetCsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    Fail(ErrorCode::kIoError, "CSV is empty");
  }
  // Strip a UTF-8 byte-order mark.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = SplitFields(line);
  std::optional<std::size_t> label_col;
  RawTable table;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == "label") {
      if (label_col) Fail(ErrorCode::kIoError, "duplicate label column");
      label_col = j;
    } else {
      table.feature_names.emplace_back(header[j]);
    }
  }
  if (!label_col) Fail(ErrorCode::kIoError, "no column named \"label\"");
  if (table.feature_names.empty()) {
    Fail(ErrorCode::kIoError, "CSV has no feature columns");
  }

  std::vector<double> values;
  std::vector<double> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto fields = SplitFields(line);
    if (fields.size() != header.size()) {
      Fail(ErrorCode::kIoError, "line " + std::to_string(line_no) + " has " +
                                    std::to_string(fields.size()) +
                                    " fields, expected " +
                                    std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      const auto value = ParseNumber(fields[j]);
      if (!value) {
        Fail(ErrorCode::kInvalidData, "line " + std::to_string(line_no) +
                                          ": non-numeric field \"" +
                                          std::string(fields[j]) + "\"");
      }
      if (j == *label_col) {
        labels.push_back(*value);
      } else {
        values.push_back(*value);
      }
    }
  }
  const auto rows = static_cast<Eigen::Index>(labels.size());
  const auto cols = static_cast<Eigen::Index>(table.feature_names.size());
  if (rows == 0) Fail(ErrorCode::kIoError, "CSV has no data rows");
  table.features =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                               Eigen::RowMajor>>(values.data(), rows, cols);
  table.labels = Eigen::Map<Vector>(labels.data(), rows);
  return table;
}

RawTable ReadDatasetCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path);
  return ParseDatasetCsv(in);
}

Dataset LoadDataset(const std::string& path) {
  const RawTable table = ReadDatasetCsv(path);
  return NormalizeDataset(table.features, table.labels);
}

void WriteDatasetCsv(const Dataset& data, std::ostream& out) {
  const auto precision = std::numeric_limits<double>::max_digits10;
  for (Eigen::Index j = 0; j < data.dims(); ++j) {
    out << "x" << j << ",";
  }
  out << "label\n";
  out << std::setprecision(precision);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.dims(); ++j) {
      out << data.features()(i, j) << ",";
    }
    out << static_cast<int>(data.labels()[i]) << "\n";
  }
}

Vector ReadScalarColumnCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path);
  std::vector<double> values;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    const auto field = Trim(line);
    if (field.empty()) continue;
    const auto value = ParseNumber(SplitFields(field).front());
    if (!value) {
      if (first) {
        first = false;
        continue;
      }
      Fail(ErrorCode::kInvalidData,
           "non-numeric value \"" + std::string(field) + "\" in " + path);
    }
    first = false;
    values.push_back(*value);
  }
  return Eigen::Map<Vector>(values.data(),
                            static_cast<Eigen::Index>(values.size()));
}

TrainTestSplit SplitDataset(const Dataset& data, double train_fraction,
                            const RngSpec& rng) {
  const Eigen::Index m = data.rows();
  if (m < 2) Fail(ErrorCode::kInvalidArgument, "need two rows to split");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "train fraction must be in (0, 1)");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  Engine engine = rng.Stream(kSplitStream);
  // Fisher–Yates with an explicit draw so the permutation does not depend on
  // the standard library's shuffle implementation.
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(engine() % (i + 1));
    std::swap(order[i], order[j]);
  }
  auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(m)));
  n_train = std::clamp<std::size_t>(n_train, 1, order.size() - 1);
  std::vector<Eigen::Index> train(order.begin(), order.begin() + n_train);
  std::vector<Eigen::Index> test(order.begin() + n_train, order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return TrainTestSplit{data.Subset(train), data.Subset(test)};
}

}  // namespace privmarket
