#pragma once

#include <map>
#include <string>
#include <vector>

#include "dpp/zoo/models.hpp"

namespace dpp {

// Parameter groups, one tensor file each: E, Dx, Dz, nsp, lmx, lmz, dis.
const std::vector<std::string>& checkpoint_groups();

// Writes meta.txt plus one <group>.bin per requested group (all by default).
// Tensor files: "DPPT" magic, u32 version, u32 tensor count, then per tensor
// u32 name length, name bytes, u32 rows, u32 cols, rows*cols little-endian
// float32 in column-major order; the file ends with a u64 FNV-1a checksum of
// every preceding byte.
void save_checkpoint(ModelSet& m, const std::string& dir, const std::vector<std::string>& groups = {});

// Rebuilds the architecture recorded in meta.txt around `vocabs` and loads
// every group listed there. Throws LoadError naming the file on a missing or
// truncated file, checksum or shape mismatch, non-finite values, or a
// vocabulary fingerprint that differs from the recorded one.
ModelSet load_checkpoint(const std::string& dir, const Vocabularies& vocabs);

// Key/value pairs of meta.txt.
std::map<std::string, std::string> read_checkpoint_meta(const std::string& dir);

}  // namespace dpp
