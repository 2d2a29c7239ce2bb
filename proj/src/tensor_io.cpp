#include "sylgl/tensor_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <ostream>

#include "sylgl/errors.hpp"

namespace sylgl {

namespace {

constexpr char kMagic[4] = {'S', 'Y', 'G', 'T'};
constexpr unsigned char kVersion = 0x01;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(b), 8);
}

/// Reader that tracks its byte offset so errors can point at the spot.
class Cursor {
public:
    explicit Cursor(std::istream& is) : is_(is) {}

    std::size_t offset() const { return offset_; }

    void read(unsigned char* out, std::size_t n, const char* what) {
        is_.read(reinterpret_cast<char*>(out), static_cast<std::streamsize>(n));
        const std::size_t got = static_cast<std::size_t>(is_.gcount());
        if (got != n) {
            throw IoError("truncated SYGT file: reading " + std::string(what) + " needed " +
                              std::to_string(n) + " bytes, got " + std::to_string(got) +
                              " (missing " + std::to_string(n - got) + ")",
                          offset_ + got);
        }
        offset_ += n;
    }

    std::uint32_t read_u32(const char* what) {
        unsigned char b[4];
        read(b, 4, what);
        return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
               (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }

    double read_f64(const char* what) {
        unsigned char b[8];
        read(b, 8, what);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }

private:
    std::istream& is_;
    std::size_t offset_ = 0;
};

}  // namespace

void write_sygt(std::ostream& os, const DenseTensor& t) {
    os.write(kMagic, 4);
    os.put(static_cast<char>(kVersion));
    put_u32(os, static_cast<std::uint32_t>(t.order()));
    for (int k = 0; k < t.order(); ++k) put_u32(os, static_cast<std::uint32_t>(t.dim(k)));
    for (std::size_t i = 0; i < t.size(); ++i) put_f64(os, t[i]);
    if (!os) throw IoError("SYGT write failed", 0);
}

void write_sygt_file(const std::string& path, const DenseTensor& t) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path, 0);
    write_sygt(os, t);
}

DenseTensor read_sygt(std::istream& is) {
    Cursor cur(is);
    unsigned char magic[4];
    cur.read(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError("bad SYGT magic bytes", 0);
    unsigned char version;
    cur.read(&version, 1, "version");
    if (version != kVersion)
        throw IoError("unsupported SYGT version " + std::to_string(int(version)), 4);

    const std::size_t k_offset = cur.offset();
    const std::uint32_t order = cur.read_u32("mode count");
    if (order == 0 || order > 64) throw IoError("implausible SYGT mode count", k_offset);

    std::vector<int> shape(order);
    std::size_t m = 1;
    for (std::uint32_t k = 0; k < order; ++k) {
        const std::size_t off = cur.offset();
        const std::uint32_t d = cur.read_u32("mode size");
        if (d == 0) throw IoError("SYGT mode size must be >= 1", off);
        shape[k] = static_cast<int>(d);
        if (m > std::numeric_limits<std::size_t>::max() / d)
            throw IoError("SYGT dimensions overflow", off);
        m *= d;
    }

    std::vector<double> values(m);
    for (std::size_t i = 0; i < m; ++i) values[i] = cur.read_f64("tensor values");
    return DenseTensor(std::move(shape), std::move(values));
}

DenseTensor read_sygt_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path, 0);
    return read_sygt(is);
}

}  // namespace sylgl
