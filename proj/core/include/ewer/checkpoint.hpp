#ifndef EWER_CHECKPOINT_HPP_
#define EWER_CHECKPOINT_HPP_

#include <string>
#include <utility>

#include "ewer/model.hpp"

namespace ewer {

// Binary container: magic "EWERMODL", version byte, config JSON blob,
// class-structure JSON blob, named tensors (rows, cols, row-major 64-bit
// little-endian floats), then a CRC32 of everything before it. A double
// task file holds both heads, tensor names prefixed "err/" and "n/".

void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

void save_double_model(const ModelParams& err, const ModelParams& n,
                       const std::string& path);
std::pair<ModelParams, ModelParams> load_double_model(const std::string& path);

// Which loader a file wants. Verifies integrity like the loaders do.
ModelConfig::Task checkpoint_task(const std::string& path);

}  // namespace ewer

#endif  // EWER_CHECKPOINT_HPP_
