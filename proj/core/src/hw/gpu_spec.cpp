#include "rnnkit/hw/gpu_spec.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rnnkit::hw {

using nlohmann::ordered_json;

DtypeSpec dtype(const std::string& name) {
  if (name == "bf16" || name == "bfloat16") return {"bf16", 2};
  if (name == "fp16" || name == "float16") return {"fp16", 2};
  if (name == "fp32" || name == "float32") return {"fp32", 4};
  if (name == "fp64" || name == "float64") return {"fp64", 8};
  throw std::invalid_argument("unknown dtype: " + name);
}

Int accumulator_bytes(const DtypeSpec& d) { return std::max<Int>(4, d.bytes_per_element); }

std::vector<Int> GpuSpec::outer_tile_sizes() const {
  std::set<Int> out;
  for (const auto& s : mma_shapes) {
    out.insert(s[0]);
    out.insert(s[2]);
  }
  return {out.begin(), out.end()};
}

namespace {

constexpr Int kKiB = 1024;

GpuSpec base_spec() {
  GpuSpec g;
  g.max_threads_per_block = 1024;
  g.warp_size = 32;
  g.register_file_per_sm_bytes = 256 * kKiB;
  g.mma_shapes = {{32, 16, 8}, {16, 16, 16}, {8, 16, 32}};
  g.min_accumulate_tile = 16;
  return g;
}

}  // namespace

GpuSpec preset(const std::string& name) {
  GpuSpec g = base_spec();
  if (name == "H100") {
    g.name = "H100";
    g.sm_count = 132;
    g.sram_per_sm_bytes = 256 * kKiB;
    g.sram_usable_per_block_bytes = 228 * kKiB;
    g.hbm_bytes = 80LL * 1024 * 1024 * 1024;
  } else if (name == "A100") {
    g.name = "A100";
    g.sm_count = 108;  // calibration: device datasheet value
    g.sram_per_sm_bytes = 192 * kKiB;
    g.sram_usable_per_block_bytes = 192 * kKiB;
    g.hbm_bytes = 80LL * 1024 * 1024 * 1024;
  } else if (name == "A40") {
    g.name = "A40";
    g.sm_count = 84;  // calibration: device datasheet value
    g.sram_per_sm_bytes = 128 * kKiB;
    g.sram_usable_per_block_bytes = 128 * kKiB;
    g.hbm_bytes = 48LL * 1024 * 1024 * 1024;
    // Matched to the RTX3090 grid bound: both boards share one planner
    // feasibility profile (identical published head-dimension lists).
    g.calibration.max_coresident_blocks = 82;
  } else if (name == "RTX3090") {
    g.name = "RTX3090";
    g.sm_count = 82;  // calibration: device datasheet value
    g.sram_per_sm_bytes = 128 * kKiB;
    g.sram_usable_per_block_bytes = 128 * kKiB;
    g.hbm_bytes = 24LL * 1024 * 1024 * 1024;
  } else {
    throw std::invalid_argument("unknown GPU preset: " + name);
  }
  return g;
}

std::vector<std::string> preset_names() { return {"H100", "A100", "A40", "RTX3090"}; }

std::vector<Violation> validate(const GpuSpec& g) {
  std::vector<Violation> out;
  auto bad = [&out](const std::string& field, const std::string& msg) {
    out.push_back({field, msg});
  };
  if (g.sm_count < 1) bad("sm_count", "must be >= 1");
  if (g.sram_per_sm_bytes < 1) bad("sram_per_sm_bytes", "must be >= 1");
  if (g.sram_usable_per_block_bytes > g.sram_per_sm_bytes)
    bad("sram_usable_per_block_bytes", "exceeds sram_per_sm_bytes");
  if (g.sram_usable_per_block_bytes < 1) bad("sram_usable_per_block_bytes", "must be >= 1");
  if (g.register_file_per_sm_bytes < 1) bad("register_file_per_sm_bytes", "must be >= 1");
  if (g.warp_size < 1) bad("warp_size", "must be >= 1");
  if (g.warp_size >= 1 && g.max_threads_per_block % g.warp_size != 0)
    bad("max_threads_per_block", "must be a multiple of warp_size");
  if (g.mma_shapes.empty()) bad("mma_shapes", "must not be empty");
  for (const auto& s : g.mma_shapes)
    if (s[0] < 1 || s[1] < 1 || s[2] < 1) bad("mma_shapes", "shape dimensions must be positive");
  if (g.min_accumulate_tile < 1) bad("min_accumulate_tile", "must be >= 1");
  return out;
}

std::string gpu_to_json(const GpuSpec& g) {
  ordered_json j;
  j["name"] = g.name;
  j["sm_count"] = g.sm_count;
  j["sram_per_sm_bytes"] = g.sram_per_sm_bytes;
  j["sram_usable_per_block_bytes"] = g.sram_usable_per_block_bytes;
  j["register_file_per_sm_bytes"] = g.register_file_per_sm_bytes;
  j["max_threads_per_block"] = g.max_threads_per_block;
  j["warp_size"] = g.warp_size;
  j["hbm_bytes"] = g.hbm_bytes;
  j["mma_shapes"] = ordered_json::array();
  for (const auto& s : g.mma_shapes) j["mma_shapes"].push_back({s[0], s[1], s[2]});
  j["min_accumulate_tile"] = g.min_accumulate_tile;
  j["calibration"] = {
      {"max_regs_per_thread_bytes", g.calibration.max_regs_per_thread_bytes},
      {"reserved_regs_per_thread_bytes", g.calibration.reserved_regs_per_thread_bytes},
      {"max_coresident_blocks", g.calibration.max_coresident_blocks},
  };
  return j.dump(2) + "\n";
}

GpuSpec gpu_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("invalid GPU JSON: ") + e.what());
  }
  GpuSpec g;
  g.name = j.at("name").get<std::string>();
  g.sm_count = j.at("sm_count").get<Int>();
  g.sram_per_sm_bytes = j.at("sram_per_sm_bytes").get<Int>();
  g.sram_usable_per_block_bytes = j.at("sram_usable_per_block_bytes").get<Int>();
  g.register_file_per_sm_bytes = j.at("register_file_per_sm_bytes").get<Int>();
  g.max_threads_per_block = j.at("max_threads_per_block").get<Int>();
  g.warp_size = j.at("warp_size").get<Int>();
  g.hbm_bytes = j.value("hbm_bytes", Int{0});
  for (const auto& s : j.at("mma_shapes"))
    g.mma_shapes.push_back({s.at(0).get<Int>(), s.at(1).get<Int>(), s.at(2).get<Int>()});
  g.min_accumulate_tile = j.at("min_accumulate_tile").get<Int>();
  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    g.calibration.max_regs_per_thread_bytes =
        c.value("max_regs_per_thread_bytes", g.calibration.max_regs_per_thread_bytes);
    g.calibration.reserved_regs_per_thread_bytes =
        c.value("reserved_regs_per_thread_bytes", g.calibration.reserved_regs_per_thread_bytes);
    g.calibration.max_coresident_blocks =
        c.value("max_coresident_blocks", g.calibration.max_coresident_blocks);
  }
  return g;
}

GpuSpec resolve_gpu(const std::string& name_or_path, const std::string& preset_dir) {
  namespace fs = std::filesystem;
  auto load_file = [](const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open GPU file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return gpu_from_json(ss.str());
  };
  if (name_or_path.find('/') != std::string::npos || name_or_path.ends_with(".json"))
    return load_file(name_or_path);
  for (const auto& n : preset_names()) {
    std::string lower = n;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    std::string arg = name_or_path;
    std::transform(arg.begin(), arg.end(), arg.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (arg == lower) return preset(n);
  }
  if (!preset_dir.empty()) {
    std::string lower = name_or_path;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    fs::path candidate = fs::path(preset_dir) / (lower + ".json");
    if (fs::exists(candidate)) return load_file(candidate);
  }
  throw std::invalid_argument("unknown GPU preset or file: " + name_or_path);
}

}  // namespace rnnkit::hw
