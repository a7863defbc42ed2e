#include "laneseq/tensor.hpp"

#include <bit>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace laneseq {

size_t shape_size(const std::vector<uint32_t>& shape) {
    size_t n = 1;
    for (uint32_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

std::string shape_str(const std::vector<uint32_t>& shape) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

Tensor::Tensor(std::vector<uint32_t> s, double fill)
    : shape(std::move(s)), data(shape_size(shape), fill) {}

// --- LSTF -------------------------------------------------------------------

static void put_bytes(std::ostream& out, const void* p, size_t n) {
    out.write(static_cast<const char*>(p), std::streamsize(n));
}

static void put_u32(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    put_bytes(out, b, 4);
}

void write_tensor(std::ostream& out, const Tensor& t) {
    if (t.rank() > 255) throw std::runtime_error("write_tensor: rank too large");
    put_bytes(out, "LSTF", 4);
    unsigned char ver = 1, rank = static_cast<unsigned char>(t.rank());
    put_bytes(out, &ver, 1);
    put_bytes(out, &rank, 1);
    for (uint32_t d : t.shape) put_u32(out, d);
    std::vector<unsigned char> payload(t.size() * 8);
    for (size_t i = 0; i < t.size(); ++i) {
        uint64_t bits = std::bit_cast<uint64_t>(t.data[i]);
        for (int k = 0; k < 8; ++k) payload[i * 8 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    if (!payload.empty()) put_bytes(out, payload.data(), payload.size());
    if (!out) throw std::runtime_error("write_tensor: stream write failed");
}

static void need_bytes(std::istream& in, void* p, size_t n, const std::string& where) {
    in.read(static_cast<char*>(p), std::streamsize(n));
    if (size_t(in.gcount()) != n)
        throw std::runtime_error("read_tensor: truncated container in " + where);
}

Tensor read_tensor(std::istream& in, const std::string& where) {
    char magic[4];
    need_bytes(in, magic, 4, where);
    if (magic[0] != 'L' || magic[1] != 'S' || magic[2] != 'T' || magic[3] != 'F')
        throw std::runtime_error("read_tensor: corrupted magic in " + where);
    unsigned char ver = 0, rank = 0;
    need_bytes(in, &ver, 1, where);
    if (ver != 1)
        throw std::runtime_error("read_tensor: unsupported version " + std::to_string(int(ver)) +
                                 " in " + where);
    need_bytes(in, &rank, 1, where);
    std::vector<uint32_t> shape(rank);
    for (auto& d : shape) {
        unsigned char b[4];
        need_bytes(in, b, 4, where);
        d = uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
    }
    Tensor t(shape);
    std::vector<unsigned char> payload(t.size() * 8);
    if (!payload.empty()) need_bytes(in, payload.data(), payload.size(), where);
    for (size_t i = 0; i < t.size(); ++i) {
        uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= uint64_t(payload[i * 8 + k]) << (8 * k);
        t.data[i] = std::bit_cast<double>(bits);
    }
    return t;
}

void save_tensor(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("save_tensor: cannot open " + path);
    write_tensor(f, t);
    if (!f) throw std::runtime_error("save_tensor: write failed for " + path);
}

Tensor load_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("load_tensor: cannot open " + path);
    return read_tensor(f, path);
}

}  // namespace laneseq
