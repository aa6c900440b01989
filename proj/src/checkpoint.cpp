#include "ufno/checkpoint.hpp"

#include <cstdio>
#include <filesystem>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ufno {

using nlohmann::json;

namespace {

constexpr std::uint32_t kVersion = 1;

std::vector<std::uint32_t> blob_shape(const FnoConfig& cfg, const std::string& name) {
  const std::uint32_t dv = cfg.width, m = cfg.modes;
  if (name == "lift_w") return {dv, cfg.in_channels};
  if (name == "lift_b") return {dv};
  if (name == "proj_w") return {cfg.out_channels, dv};
  if (name == "proj_b") return {cfg.out_channels};
  if (name.rfind("layer", 0) == 0) {
    if (name.ends_with("_spec_w")) return {4, m, m, m, dv, dv, 2};
    if (name.ends_with("_w")) return {dv, dv};
    if (name.ends_with("_b")) return {dv};
  }
  fail(ErrorCode::format, "checkpoint: unknown parameter blob '" + name + "'");
}

void write_blob(std::ostream& os, const std::string& name,
                const std::vector<std::uint32_t>& shape, const std::vector<float>& data) {
  const std::uint32_t name_len = std::uint32_t(name.size());
  os.write(reinterpret_cast<const char*>(&name_len), 4);
  os.write(name.data(), name_len);
  const std::uint32_t ndim = std::uint32_t(shape.size());
  os.write(reinterpret_cast<const char*>(&ndim), 4);
  os.write(reinterpret_cast<const char*>(shape.data()), 4 * ndim);
  os.write(reinterpret_cast<const char*>(data.data()), std::streamsize(4 * data.size()));
}

bool read_blob(std::istream& is, std::string& name, std::vector<std::uint32_t>& shape,
               std::vector<float>& data) {
  std::uint32_t name_len = 0;
  is.read(reinterpret_cast<char*>(&name_len), 4);
  if (is.gcount() == 0) return false; // clean end of file
  if (!is || name_len > 4096) fail(ErrorCode::format, "checkpoint: corrupt blob name length");
  name.resize(name_len);
  is.read(name.data(), name_len);
  std::uint32_t ndim = 0;
  is.read(reinterpret_cast<char*>(&ndim), 4);
  if (!is || ndim > 16) fail(ErrorCode::format, "checkpoint: corrupt blob rank");
  shape.resize(ndim);
  is.read(reinterpret_cast<char*>(shape.data()), 4 * ndim);
  std::size_t count = 1;
  for (auto d : shape) count *= d;
  data.resize(count);
  is.read(reinterpret_cast<char*>(data.data()), std::streamsize(4 * count));
  if (std::size_t(is.gcount()) != 4 * count)
    fail(ErrorCode::format, "checkpoint: truncated payload in blob '" + name + "'");
  return true;
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const FnoConfig& cfg = ckpt.params.config;
  cfg.validate();

  json header;
  header["config"] = {{"modes", cfg.modes},       {"width", cfg.width},
                      {"layers", cfg.layers},     {"in_channels", cfg.in_channels},
                      {"out_channels", cfg.out_channels}, {"activation", cfg.activation}};
  header["epoch"] = ckpt.epoch;
  header["seed"] = ckpt.seed;
  header["manifest_hash"] = ckpt.manifest_hash;
  header["train_loss"] = ckpt.train_loss_history;
  header["test_loss"] = ckpt.test_loss_history;
  header["has_adam"] = ckpt.has_adam;
  header["adam_step"] = ckpt.adam.step;
  const std::string head = header.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorCode::io, "cannot open for write: " + tmp);
    os.write("UFCK", 4);
    const std::uint32_t ver = kVersion;
    os.write(reinterpret_cast<const char*>(&ver), 4);
    const std::uint32_t head_len = std::uint32_t(head.size());
    os.write(reinterpret_cast<const char*>(&head_len), 4);
    os.write(head.data(), head_len);

    for_each_blob(ckpt.params, [&](const std::string& name, const std::vector<float>& blob) {
      write_blob(os, name, blob_shape(cfg, name), blob);
    });
    if (ckpt.has_adam) {
      std::size_t bi = 0;
      for_each_blob(ckpt.params, [&](const std::string& name, const std::vector<float>&) {
        write_blob(os, "adam_m_" + name, blob_shape(cfg, name), ckpt.adam.m[bi]);
        write_blob(os, "adam_v_" + name, blob_shape(cfg, name), ckpt.adam.v[bi]);
        ++bi;
      });
    }
    if (!os) fail(ErrorCode::io, "write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "UFCK", 4) != 0)
    fail(ErrorCode::format, path + ": not a checkpoint file");
  std::uint32_t ver = 0, head_len = 0;
  is.read(reinterpret_cast<char*>(&ver), 4);
  if (ver != kVersion)
    fail(ErrorCode::format, path + ": unsupported checkpoint version " + std::to_string(ver));
  is.read(reinterpret_cast<char*>(&head_len), 4);
  if (!is || head_len > (1u << 24)) fail(ErrorCode::format, path + ": corrupt header length");
  std::string head(head_len, '\0');
  is.read(head.data(), head_len);
  if (!is) fail(ErrorCode::format, path + ": truncated header");

  Checkpoint ckpt;
  FnoConfig cfg;
  try {
    json j = json::parse(head);
    const auto& jc = j.at("config");
    cfg.modes = jc.at("modes").get<std::uint32_t>();
    cfg.width = jc.at("width").get<std::uint32_t>();
    cfg.layers = jc.at("layers").get<std::uint32_t>();
    cfg.in_channels = jc.at("in_channels").get<std::uint32_t>();
    cfg.out_channels = jc.at("out_channels").get<std::uint32_t>();
    cfg.activation = jc.at("activation").get<std::string>();
    ckpt.epoch = j.at("epoch").get<std::uint32_t>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.manifest_hash = j.at("manifest_hash").get<std::string>();
    ckpt.train_loss_history = j.at("train_loss").get<std::vector<double>>();
    ckpt.test_loss_history = j.at("test_loss").get<std::vector<double>>();
    ckpt.has_adam = j.at("has_adam").get<bool>();
    ckpt.adam.step = j.at("adam_step").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorCode::format, path + ": bad checkpoint header: " + e.what());
  }
  cfg.validate();
  ckpt.params = zero_parameters<float>(cfg);
  if (ckpt.has_adam) ckpt.adam = [&] {
    AdamState<float> st = make_adam_state(ckpt.params);
    st.step = ckpt.adam.step;
    return st;
  }();

  std::vector<std::vector<float>*> pblobs;
  std::vector<std::string> names;
  for_each_blob(ckpt.params, [&](const std::string& n, std::vector<float>& b) {
    pblobs.push_back(&b);
    names.push_back(n);
  });

  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
  std::size_t seen = 0, adam_seen = 0;
  while (read_blob(is, name, shape, data)) {
    const bool is_m = name.rfind("adam_m_", 0) == 0;
    const bool is_v = name.rfind("adam_v_", 0) == 0;
    const std::string base = (is_m || is_v) ? name.substr(7) : name;
    const auto expect = blob_shape(cfg, base);
    if (shape != expect) {
      std::string got, want;
      for (auto d : shape) got += std::to_string(d) + " ";
      for (auto d : expect) want += std::to_string(d) + " ";
      fail(ErrorCode::format, path + ": blob '" + name + "' has shape [ " + got +
                                  "] but the header config requires [ " + want + "]");
    }
    std::size_t bi = 0;
    for (; bi < names.size(); ++bi)
      if (names[bi] == base) break;
    if (bi == names.size()) fail(ErrorCode::format, path + ": unexpected blob '" + name + "'");
    if (is_m)
      ckpt.adam.m[bi] = data, ++adam_seen;
    else if (is_v)
      ckpt.adam.v[bi] = data, ++adam_seen;
    else
      *pblobs[bi] = data, ++seen;
  }
  if (seen != names.size())
    fail(ErrorCode::format, path + ": missing parameter blobs (" + std::to_string(seen) + "/" +
                                std::to_string(names.size()) + ")");
  if (ckpt.has_adam && adam_seen != 2 * names.size())
    fail(ErrorCode::format, path + ": missing optimizer blobs");
  return ckpt;
}

std::string file_hash_hex(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open: " + path);
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= std::uint8_t(buf[i]);
      h *= 1099511628211ull;
    }
    if (!is) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
  return std::string(out);
}

} // namespace ufno
