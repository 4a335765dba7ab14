#pragma once

// Memory of one transformer block under mixed-precision Adam and the minimum
// pipeline depth needed to host a model on devices of a given capacity.
//
//   M_block = 16 W + 34 s b h + 5 b a s^2   bytes
//   N_max   = floor(m / M_block)
//   P       = ceil(L / N_max), or 2L (a lower bound) when N_max = 0

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "stalelab/error.hpp"

namespace stalelab {

struct PipelineConfig {
  std::string name;
  std::uint64_t h = 0;  // embedding dim
  std::uint64_t a = 0;  // attention heads
  std::uint64_t s = 0;  // sequence length
  std::uint64_t b = 0;  // batch size
  std::uint64_t w = 0;  // parameters per block
  std::uint64_t l = 0;  // blocks
};

struct Device {
  std::string name;
  std::uint64_t memory_bytes = 0;  // decimal: 8 GB = 8e9
};

struct StageResult {
  std::uint64_t p = 0;
  std::uint64_t n_max = 0;
  bool lower_bound_only = false;
};

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t x, std::uint64_t y) {
  std::uint64_t out = 0;
  if (__builtin_mul_overflow(x, y, &out)) throw Error("block memory overflows 64 bits");
  return out;
}

inline std::uint64_t checked_add(std::uint64_t x, std::uint64_t y) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(x, y, &out)) throw Error("block memory overflows 64 bits");
  return out;
}

}  // namespace detail

inline std::uint64_t block_memory(const PipelineConfig& c) {
  using detail::checked_add;
  using detail::checked_mul;
  const std::uint64_t states = checked_mul(16, c.w);
  const std::uint64_t linear = checked_mul(checked_mul(checked_mul(34, c.s), c.b), c.h);
  const std::uint64_t attention = checked_mul(checked_mul(checked_mul(checked_mul(5, c.b), c.a), c.s), c.s);
  return checked_add(checked_add(states, linear), attention);
}

inline StageResult required_stages(const PipelineConfig& c, std::uint64_t device_memory) {
  if (c.l == 0) throw Error("model must have at least one block");
  const std::uint64_t block = block_memory(c);
  if (block == 0) throw Error("block memory is zero");
  StageResult r;
  r.n_max = device_memory / block;
  if (r.n_max >= 1) {
    r.p = (c.l + r.n_max - 1) / r.n_max;
  } else {
    r.p = 2 * c.l;
    r.lower_bound_only = true;
  }
  return r;
}

inline std::string format_stage_cell(const StageResult& r) {
  return std::to_string(r.p) + (r.lower_bound_only ? "*" : "");
}

// CSV: header "model,<device>,...", one row per model, '*' marks lower bounds.
inline std::string emit_stage_table(const std::vector<PipelineConfig>& rows, const std::vector<Device>& devices) {
  std::ostringstream out;
  out << "model";
  for (const Device& d : devices) out << ',' << d.name;
  out << '\n';
  for (const PipelineConfig& row : rows) {
    out << row.name;
    for (const Device& d : devices) out << ',' << format_stage_cell(required_stages(row, d.memory_bytes));
    out << '\n';
  }
  return out.str();
}

}  // namespace stalelab
