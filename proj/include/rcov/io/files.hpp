#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rcov::io {

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
void atomic_write(const std::string& path, std::span<const char> bytes);
inline void atomic_write(const std::string& path, const std::string& text) {
  atomic_write(path, std::span<const char>(text.data(), text.size()));
}

std::vector<char> read_bytes(const std::string& path);
std::string read_text(const std::string& path);

void put_u64_le(std::vector<char>& out, std::uint64_t v);
void put_f64_le(std::vector<char>& out, double v);
std::uint64_t get_u64_le(const char* p);
double get_f64_le(const char* p);

/// FNV-1a, 64-bit.
std::uint64_t fnv1a(std::string_view text);

}  // namespace rcov::io
