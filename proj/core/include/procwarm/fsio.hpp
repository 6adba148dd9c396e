#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace procwarm {

// Whole-file helpers. Writers go through a temp file + rename so readers
// never observe a partially written artifact.
std::string read_file(const std::filesystem::path& path);
void write_file_atomic(const std::filesystem::path& path, const void* data, std::size_t size);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Little-endian scalar encoding, independent of host byte order.
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v);
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void put_f32(std::vector<std::uint8_t>& out, float v);

std::uint16_t get_u16(const std::uint8_t* p);
std::uint32_t get_u32(const std::uint8_t* p);
float get_f32(const std::uint8_t* p);

}  // namespace procwarm
