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

#ifndef PRIVMARKET_DATASET_H_
#define PRIVMARKET_DATASET_H_

#include <iosfwd>
#include <string>
#include <vector>

#include "privmarket/rng.h"
#include "privmarket/types.h"

namespace privmarket {

// Maps labels from {0,1} or {−1,+1} onto {−1,+1} and divides every row by one
// global factor max(1, max_i ‖x_i‖) so all rows land in the unit ball. The
// factor is kept in Dataset::scale().
//
// Errors: kInvalidLabels when the labels are not one of the two accepted
// binary encodings, kInvalidData on a non-finite feature.
Dataset NormalizeDataset(const Matrix& raw_features, const Vector& raw_labels);

// CSV with a header row, one column named "label", the rest numeric features.
struct RawTable {
  std::vector<std::string> feature_names;
  Matrix features;
  Vector labels;
};

RawTable ParseDatasetCsv(std::istream& in);
RawTable ReadDatasetCsv(const std::string& path);

// Reads and normalizes in one step.
Dataset LoadDataset(const std::string& path);

// Writes features with full round-trip precision, label column last.
void WriteDatasetCsv(const Dataset& data, std::ostream& out);

// One value per line; an optional non-numeric first line is treated as a
// header.
Vector ReadScalarColumnCsv(const std::string& path);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

// Seed-deterministic disjoint split; `train_fraction` of the rows (at least
// one row on each side) go to train.
TrainTestSplit SplitDataset(const Dataset& data, double train_fraction,
                            const RngSpec& rng);

}  // namespace privmarket

#endif  // PRIVMARKET_DATASET_H_
