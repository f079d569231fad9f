#pragma once

// Little-endian binary container helpers shared by the feature, bank and
// model file formats.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace tpmkl {

class ByteWriter {
public:
    void put_bytes(const void* data, std::size_t size);
    void put_magic(std::string_view magic) { put_bytes(magic.data(), magic.size()); }
    void put_u8(std::uint8_t v) { put_bytes(&v, 1); }
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i32(std::int32_t v) { put_u32(static_cast<std::uint32_t>(v)); }
    void put_f32(float v);
    void put_f64(double v);
    void put_string(std::string_view s);

    const std::vector<std::uint8_t>& bytes() const { return buffer_; }
    void save(const std::filesystem::path& path) const;

private:
    std::vector<std::uint8_t> buffer_;
};

/// Cursor over an in-memory file image. Every read failure raises
/// FormatError with the path and the offending byte offset.
class ByteReader {
public:
    ByteReader(std::vector<std::uint8_t> data, std::string path);
    static ByteReader from_file(const std::filesystem::path& path);

    void expect_magic(std::string_view magic);
    std::uint8_t get_u8();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    std::int32_t get_i32() { return static_cast<std::int32_t>(get_u32()); }
    float get_f32();
    double get_f64();
    std::string get_string();

    std::size_t offset() const { return offset_; }
    std::size_t remaining() const { return data_.size() - offset_; }
    const std::string& path() const { return path_; }
    void expect_end() const;
    [[noreturn]] void fail(const std::string& what, std::size_t at) const;

private:
    void need(std::size_t size);

    std::vector<std::uint8_t> data_;
    std::string path_;
    std::size_t offset_ = 0;
};

}  // namespace tpmkl
