#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace rnnkit::hw {

using Int = std::int64_t;

struct DtypeSpec {
  std::string name;
  Int bytes_per_element = 0;
};

/// Named element types used across the planner and the reference engine.
DtypeSpec dtype(const std::string& name);  // bf16|fp16|fp32|fp64

/// Matmul accumulator width used in the footprint model: low-precision
/// inputs accumulate in 4-byte floats.
Int accumulator_bytes(const DtypeSpec& d);

/// Fields not derivable from published sources are calibration parameters.
/// They ship in the preset files and are never hidden constants.
struct GpuCalibration {
  // Per-thread register cap (255 general-purpose 4-byte registers).
  Int max_regs_per_thread_bytes = 255 * 4;
  // Registers the compiler consumes per thread for addressing/bookkeeping,
  // modeled as a flat reservation subtracted from the budget.
  Int reserved_regs_per_thread_bytes = 26 * 4;
  // Upper bound on co-resident blocks of a grid-synchronized launch;
  // defaults to sm_count when 0.
  Int max_coresident_blocks = 0;
};

struct GpuSpec {
  std::string name;
  Int sm_count = 0;
  Int sram_per_sm_bytes = 0;
  Int sram_usable_per_block_bytes = 0;
  Int register_file_per_sm_bytes = 0;
  Int max_threads_per_block = 0;
  Int warp_size = 0;
  Int hbm_bytes = 0;
  // Tensor-core minimum shapes as (out_rows, accumulate, out_cols).
  std::vector<std::array<Int, 3>> mma_shapes;
  Int min_accumulate_tile = 0;
  GpuCalibration calibration;

  Int coresident_blocks() const {
    return calibration.max_coresident_blocks > 0 ? calibration.max_coresident_blocks : sm_count;
  }
  /// Allowed elementary tile sizes for the outer (non-accumulating) axes.
  std::vector<Int> outer_tile_sizes() const;
};

struct Violation {
  std::string field;
  std::string message;
};

/// Built-in descriptors for H100, A100, A40 and RTX3090.
GpuSpec preset(const std::string& name);  // throws on unknown name
std::vector<std::string> preset_names();

/// Checks the GpuSpec invariants; violations are data, not errors.
std::vector<Violation> validate(const GpuSpec& spec);

GpuSpec gpu_from_json(const std::string& text);
std::string gpu_to_json(const GpuSpec& spec);

/// Resolves a --gpu argument: a preset name, a path to a JSON file, or a
/// name found as <dir>/<lowercase-name>.json under `preset_dir` (typically
/// from the RNNKIT_GPU_DIR environment variable).
GpuSpec resolve_gpu(const std::string& name_or_path, const std::string& preset_dir = "");

}  // namespace rnnkit::hw
