#pragma once

#include <string>

#include "skelfuse/model.hpp"

namespace skelfuse {

/// Single-file archive: "SFCK" magic, format version, a JSON manifest with the
/// config echo and per-tensor offsets, then one blob of little-endian 32-bit
/// floats.
template <class S>
void save_checkpoint(JointModel<S>& model, const std::string& path);

template <class S>
JointModel<S> load_checkpoint(const std::string& path);

/// Dimension check between a checkpoint's config echo and a dataset config.
void check_compatible(const ModelConfig& model, const DatasetConfig& data);

}  // namespace skelfuse
