#pragma once

#include <string>
#include <vector>

namespace vcn {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);
std::string read_file(const std::string& path);

// Sorted .png paths under a directory (sorted for determinism).
std::vector<std::string> list_pngs(const std::string& dir);

} // namespace vcn
