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


#ifndef PRIVMARKET_IO_H_
#define PRIVMARKET_IO_H_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "privmarket/rng.h"
#include "privmarket/sensitivity.h"
#include "privmarket/types.h"

namespace privmarket {

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& text);

// Hyperparameters from a JSON object with any of the keys mu, sigma, gamma,
// lambda (or lambda_reg), k, L, beta. Missing keys keep their value in
// `base`.
// "preset": "thm4-schedule" sets σ = μ². A "distribution" object, when
// present, is parsed as well.
struct ParamsFile {
  HyperParams params;
  std::optional<SensitivityDistribution> distribution;
};
ParamsFile ParseParamsJson(const std::string& text,
                           const HyperParams& base = {});
ParamsFile LoadParamsFile(const std::string& path);

// {"family": "uniform", "low": a, "high": b}
// {"family": "exponential", "rate": r}
// {"family": "piecewise_linear", "knots": [[x, density], ...]}
SensitivityDistribution ParseDistributionJson(const std::string& text);
SensitivityDistribution LoadDistributionFile(const std::string& path);

std::string DistributionToJson(const SensitivityDistribution& dist);
std::string HyperParamsToJson(const HyperParams& params);

// Sensitivities from a CSV column, or, for a path ending in ".json", drawn
// from the distribution it describes (m draws from the sensitivity stream).
// `dist_out` receives the distribution when one was read.
SensitivityProfile LoadSensitivities(
    const std::string& path, Eigen::Index m, const RngSpec& rng,
    std::optional<SensitivityDistribution>* dist_out = nullptr);

// The outcome document: allocation {a, eta, epsilon}, payments, weights and
// diagnostics {delta, lambda, proxy_loss, seed, ...}. Non-finite numbers are
// written as null.
std::string OutcomeToJson(const MechanismOutcome& outcome,
                          const std::vector<std::string>& warnings = {});

// A result table with a header row; cells are written as given.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void AddRow(std::vector<std::string> row);
};

// Shortest text that reads back as the same double; "nan"/"inf" otherwise.
std::string FormatNumber(double value);

void WriteCsv(const Table& table, std::ostream& out);
void WriteCsvFile(const Table& table, const std::string& path);

}  // namespace privmarket

#endif  // PRIVMARKET_IO_H_
