#pragma once

#include <string>

namespace lab {

// SHA-256 hex digests, used for pipeline artifact integrity.
std::string sha256_bytes(const std::string& bytes);
std::string sha256_file(const std::string& path);
// Directory digest: hash of the sorted (relative path, file digest) listing.
std::string sha256_path(const std::string& path);

} // namespace lab
