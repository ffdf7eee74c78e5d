#pragma once
// Checkpoint file: "HCQACKP1" magic, u32 format version, u64 parameter
// count, then per parameter a length-prefixed name, u32 rank, u64 dims and
// the raw float64 payload, all little-endian. A JSON manifest written next
// to the file (<path>.manifest.json) lists names/shapes plus caller-supplied
// metadata.

#include <map>
#include <string>

#include "tensor/tensor.hpp"

namespace hypercqa::tensor {

void save_checkpoint(const ParamStore& params, const std::string& path,
                     const std::map<std::string, std::string>& manifest_extra = {});

ParamStore load_checkpoint(const std::string& path);

// The metadata block of <path>.manifest.json, if present.
std::map<std::string, std::string> load_manifest_extra(const std::string& path);

}  // namespace hypercqa::tensor
