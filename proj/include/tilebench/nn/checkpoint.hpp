#pragma once

#include <filesystem>
#include <memory>
#include <vector>

#include "tilebench/nn/models.hpp"

// Checkpoint container, all integers little-endian:
//
//   "TBCK"            4-byte magic
//   u32 version       currently 1
//   u32 n, n bytes    architecture spec in the key-value config format
//   u32 value_bytes   4 (float32) or 8 (float64)
//   u32 entries
//   per entry, in declaration order (parameters, then norm running stats):
//     u32 n, n bytes  name
//     u32 rank, rank x i64 dims
//     values          prod(dims) x value_bytes
namespace tilebench::nn {

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model);

// Rebuilds the model from the stored spec and loads every entry; throws
// ParseError on a malformed file or a name/shape that does not match the spec.
template <typename T>
std::unique_ptr<Model<T>> load_checkpoint(const std::filesystem::path& path);

// In-memory copy of parameters and buffers, for keeping the best epoch.
template <typename T>
using StateSnapshot = std::vector<std::vector<T>>;

template <typename T>
StateSnapshot<T> snapshot(const Module<T>& m);
template <typename T>
void restore(Module<T>& m, const StateSnapshot<T>& s);

}  // namespace tilebench::nn
