#include "ufno/manifest.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "ufno/error.hpp"

namespace ufno {

using nlohmann::json;

void DatasetManifest::validate() const {
  if (fields.empty()) fail(ErrorCode::invalid_argument, "manifest: no field files");
  if (!(dt > 0.0)) fail(ErrorCode::invalid_argument, "manifest: dt must be positive");
  if (!(norm.std > 0.0)) fail(ErrorCode::invalid_argument, "manifest: norm.std must be positive");
  std::vector<bool> seen(windows.size(), false);
  for (auto idx : train) {
    if (idx >= windows.size() || seen[idx]) fail(ErrorCode::invalid_argument, "manifest: bad train index");
    seen[idx] = true;
  }
  for (auto idx : test) {
    if (idx >= windows.size() || seen[idx])
      fail(ErrorCode::invalid_argument, "manifest: train/test overlap or bad test index");
    seen[idx] = true;
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    fail(ErrorCode::invalid_argument, "manifest: partition does not cover all windows");
  for (const auto& w : windows) {
    for (auto i : w.input_indices)
      if (i >= fields.size()) fail(ErrorCode::invalid_argument, "manifest: window index out of range");
    if (w.target_index >= fields.size())
      fail(ErrorCode::invalid_argument, "manifest: target index out of range");
  }
}

void write_manifest(const DatasetManifest& m, const std::string& path) {
  m.validate();
  json j;
  j["fields"] = m.fields;
  j["dt"] = m.dt;
  j["windows"] = json::array();
  for (const auto& w : m.windows)
    j["windows"].push_back({{"inputs", w.input_indices}, {"target", w.target_index}});
  j["train"] = m.train;
  j["test"] = m.test;
  j["seed"] = m.seed;
  j["norm"] = {{"mean", m.norm.mean}, {"std", m.norm.std}};
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open for write: " + path);
  os << j.dump(2) << "\n";
  if (!os) fail(ErrorCode::io, "write failed: " + path);
}

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": " + e.what());
  }
  DatasetManifest m;
  try {
    m.fields = j.at("fields").get<std::vector<std::string>>();
    m.dt = j.at("dt").get<double>();
    for (const auto& jw : j.at("windows")) {
      SampleWindow w;
      w.input_indices = jw.at("inputs").get<std::vector<std::uint32_t>>();
      w.target_index = jw.at("target").get<std::uint32_t>();
      m.windows.push_back(std::move(w));
    }
    m.train = j.at("train").get<std::vector<std::uint32_t>>();
    m.test = j.at("test").get<std::vector<std::uint32_t>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.norm.mean = j.at("norm").at("mean").get<double>();
    m.norm.std = j.at("norm").at("std").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": " + e.what());
  }
  m.validate();
  return m;
}

} // namespace ufno
