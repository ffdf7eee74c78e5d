#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace hypercqa {

// FNV-1a, used for content fingerprints in manifests and vocab hashes.
inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char byte : data) {
        hash ^= byte;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex64(std::uint64_t value);
std::string hash_file(const std::string& path);

}  // namespace hypercqa
