#include "tpmkl/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tpmkl/error.hpp"

namespace tpmkl {

static_assert(std::endian::native == std::endian::little,
              "binary containers are written in host order; big-endian hosts are unsupported");

void ByteWriter::put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + size);
}

void ByteWriter::put_u32(std::uint32_t v) { put_bytes(&v, sizeof v); }
void ByteWriter::put_u64(std::uint64_t v) { put_bytes(&v, sizeof v); }
void ByteWriter::put_f32(float v) { put_bytes(&v, sizeof v); }
void ByteWriter::put_f64(double v) { put_bytes(&v, sizeof v); }

void ByteWriter::put_string(std::string_view s) {
    put_u64(s.size());
    put_bytes(s.data(), s.size());
}

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(buffer_.data()),
              static_cast<std::streamsize>(buffer_.size()));
    if (!out) {
        throw Error("write failed: " + path.string());
    }
}

ByteReader::ByteReader(std::vector<std::uint8_t> data, std::string path)
    : data_(std::move(data)), path_(std::move(path)) {}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(path.string() + ": cannot open file");
    }
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
}

void ByteReader::fail(const std::string& what, std::size_t at) const {
    throw FormatError(path_ + ": " + what + " at byte offset " + std::to_string(at));
}

void ByteReader::need(std::size_t size) {
    if (remaining() < size) {
        fail("truncated file (need " + std::to_string(size) + " bytes, have " +
                 std::to_string(remaining()) + ")",
             offset_);
    }
}

void ByteReader::expect_magic(std::string_view magic) {
    need(magic.size());
    if (std::memcmp(data_.data() + offset_, magic.data(), magic.size()) != 0) {
        fail("bad magic (expected \"" + std::string(magic) + "\")", offset_);
    }
    offset_ += magic.size();
}

std::uint8_t ByteReader::get_u8() {
    need(1);
    return data_[offset_++];
}

namespace {
template <typename T>
T read_raw(const std::vector<std::uint8_t>& data, std::size_t& offset) {
    T v;
    std::memcpy(&v, data.data() + offset, sizeof v);
    offset += sizeof v;
    return v;
}
}  // namespace

std::uint32_t ByteReader::get_u32() {
    need(4);
    return read_raw<std::uint32_t>(data_, offset_);
}

std::uint64_t ByteReader::get_u64() {
    need(8);
    return read_raw<std::uint64_t>(data_, offset_);
}

float ByteReader::get_f32() {
    need(4);
    return read_raw<float>(data_, offset_);
}

double ByteReader::get_f64() {
    need(8);
    return read_raw<double>(data_, offset_);
}

std::string ByteReader::get_string() {
    const std::size_t at = offset_;
    const std::uint64_t size = get_u64();
    if (size > remaining()) {
        fail("string length " + std::to_string(size) + " exceeds file size", at);
    }
    std::string s(reinterpret_cast<const char*>(data_.data() + offset_), size);
    offset_ += size;
    return s;
}

void ByteReader::expect_end() const {
    if (remaining() != 0) {
        fail(std::to_string(remaining()) + " trailing bytes", offset_);
    }
}

}  // namespace tpmkl
