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


#include "privmarket/io.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <variant>

#include <nlohmann/json.hpp>

#include "privmarket/dataset.h"
#include "privmarket/errors.h"

namespace privmarket {
namespace {

using nlohmann::json;

json Parse(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kIoError, what + " is not valid JSON: " + e.what());
  }
}

double NumberField(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("expected a numeric \"") + key + "\" field");
  }
  return it->get<double>();
}

void ReadOptional(const json& obj, const char* key, double& out) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  if (!it->is_number()) {
    Fail(ErrorCode::kInvalidArgument,
         std::string("\"") + key + "\" must be a number");
  }
  out = it->get<double>();
}

SensitivityDistribution DistributionFromJson(const json& obj) {
  if (!obj.is_object() || !obj.contains("family") ||
      !obj["family"].is_string()) {
    Fail(ErrorCode::kInvalidDistribution,
         "distribution needs a \"family\" string");
  }
  const std::string family = obj["family"].get<std::string>();
  if (family == "uniform") {
    return SensitivityDistribution::Uniform(NumberField(obj, "low"),
                                            NumberField(obj, "high"));
  }
  if (family == "exponential") {
    return SensitivityDistribution::Exponential(NumberField(obj, "rate"));
  }
  if (family == "piecewise_linear") {
    if (!obj.contains("knots") || !obj["knots"].is_array()) {
      Fail(ErrorCode::kInvalidDistribution, "piecewise_linear needs knots");
    }
    std::vector<PdfKnot> knots;
    for (const json& k : obj["knots"]) {
      if (!k.is_array() || k.size() != 2 || !k[0].is_number() ||
          !k[1].is_number()) {
        Fail(ErrorCode::kInvalidDistribution, "knots are [x, density] pairs");
      }
      knots.push_back({k[0].get<double>(), k[1].get<double>()});
    }
    return SensitivityDistribution::PiecewiseLinear(std::move(knots));
  }
  Fail(ErrorCode::kInvalidDistribution, "unknown family \"" + family + "\"");
}

json NumberOrNull(double value) {
  if (std::isfinite(value)) return value;
  return nullptr;
}

json VectorJson(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(NumberOrNull(v[i]));
  return arr;
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

std::string ReadTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) Fail(ErrorCode::kIoError, "write failed for " + path);
}

ParamsFile ParseParamsJson(const std::string& text, const HyperParams& base) {
  const json obj = Parse(text, "params");
  if (!obj.is_object()) {
    Fail(ErrorCode::kInvalidArgument, "params must be a JSON object");
  }
  ParamsFile file;
  file.params = base;
  HyperParams& p = file.params;
  ReadOptional(obj, "mu", p.mu);
  ReadOptional(obj, "sigma", p.sigma);
  ReadOptional(obj, "gamma", p.gamma);
  ReadOptional(obj, "lambda_reg", p.lambda_reg);
  ReadOptional(obj, "lambda", p.lambda_reg);
  ReadOptional(obj, "k", p.k);
  ReadOptional(obj, "L", p.L);
  ReadOptional(obj, "beta", p.beta);
  if (obj.contains("preset")) {
    if (!obj["preset"].is_string()) {
      Fail(ErrorCode::kInvalidArgument, "\"preset\" must be a string");
    }
    const std::string preset = obj["preset"].get<std::string>();
    if (preset != "thm4-schedule") {
      Fail(ErrorCode::kInvalidArgument, "unknown preset \"" + preset + "\"");
    }
    p = SigmaFromMuPreset(p);
  }
  if (obj.contains("distribution")) {
    file.distribution = DistributionFromJson(obj["distribution"]);
  }
  return file;
}

ParamsFile LoadParamsFile(const std::string& path) {
  return ParseParamsJson(ReadTextFile(path));
}

SensitivityDistribution ParseDistributionJson(const std::string& text) {
  return DistributionFromJson(Parse(text, "distribution"));
}

SensitivityDistribution LoadDistributionFile(const std::string& path) {
  return ParseDistributionJson(ReadTextFile(path));
}

std::string DistributionToJson(const SensitivityDistribution& dist) {
  json obj;
  std::visit(
      [&](const auto& f) {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, UniformFamily>) {
          obj = {{"family", "uniform"}, {"low", f.low}, {"high", f.high}};
        } else if constexpr (std::is_same_v<F, ExponentialFamily>) {
          obj = {{"family", "exponential"}, {"rate", f.rate}};
        } else {
          json knots = json::array();
          for (const PdfKnot& k : f.knots) knots.push_back({k.x, k.density});
          obj = {{"family", "piecewise_linear"}, {"knots", knots}};
        }
      },
      dist.family());
  return obj.dump();
}

std::string HyperParamsToJson(const HyperParams& p) {
  const json obj = {{"mu", p.mu},         {"sigma", p.sigma},
                    {"gamma", p.gamma},   {"lambda", p.lambda_reg},
                    {"k", p.k},           {"L", p.L},
                    {"beta", p.beta}};
  return obj.dump();
}

SensitivityProfile LoadSensitivities(
    const std::string& path, Eigen::Index m, const RngSpec& rng,
    std::optional<SensitivityDistribution>* dist_out) {
  if (EndsWith(path, ".json")) {
    const SensitivityDistribution dist = LoadDistributionFile(path);
    if (dist_out != nullptr) *dist_out = dist;
    return SampleSensitivities(dist, m, rng);
  }
  return SensitivityProfile(ReadScalarColumnCsv(path));
}

std::string OutcomeToJson(const MechanismOutcome& outcome,
                          const std::vector<std::string>& warnings) {
  const Diagnostics& d = outcome.diagnostics;
  json brackets = json::array();
  for (const RootBracket& b : d.root_brackets) {
    brackets.push_back({NumberOrNull(b.lo), NumberOrNull(b.hi)});
  }
  json diagnostics = {
      {"delta", NumberOrNull(d.delta)},
      {"lambda", NumberOrNull(d.lambda)},
      {"proxy_loss", NumberOrNull(d.proxy_loss)},
      {"seed", d.seed},
      {"solver", d.solver},
      {"degenerate", d.degenerate},
      {"cap_binding", d.cap_binding},
      {"effective_k", NumberOrNull(d.effective_k)},
      {"data_dependent_payments", d.data_dependent_payments},
      {"allocation_iterations", d.allocation_iterations},
      {"fit_iterations", d.fit_iterations},
      {"root_brackets", brackets},
  };
  if (!warnings.empty()) diagnostics["warnings"] = warnings;
  const json doc = {
      {"allocation",
       {{"a", VectorJson(outcome.allocation.a)},
        {"eta", NumberOrNull(outcome.allocation.eta)},
        {"epsilon", VectorJson(outcome.allocation.epsilon)}}},
      {"payments", VectorJson(outcome.payments.t)},
      {"weights", VectorJson(outcome.weights.w())},
      {"diagnostics", diagnostics},
  };
  return doc.dump(2) + "\n";
}

void Table::AddRow(std::vector<std::string> row) {
  if (row.size() != header.size()) {
    Fail(ErrorCode::kDimensionMismatch, "row width differs from header");
  }
  rows.push_back(std::move(row));
}

std::string FormatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

void WriteCsv(const Table& table, std::ostream& out) {
  auto write_row = [&](const std::vector<std::string>& row) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out << ',';
      out << row[j];
    }
    out << '\n';
  };
  write_row(table.header);
  for (const auto& row : table.rows) write_row(row);
}

void WriteCsvFile(const Table& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIoError, "cannot write " + path);
  WriteCsv(table, out);
}

}  // namespace privmarket
