#include "dynrec/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dynrec/common.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive payload is written as native little-endian");

namespace dynrec {

namespace {

constexpr char kMagic[4] = {'D', 'R', 'A', 'R'};

std::int64_t shape_count(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void append_bytes(std::vector<std::uint8_t>& out, const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    out.insert(out.end(), p, p + n);
}

}  // namespace

Archive::Archive(std::string kind) : kind_(std::move(kind)) {}

void Archive::add_f64(const std::string& name, const std::vector<double>& values,
                      const std::vector<std::int64_t>& shape) {
    if (shape_count(shape) != static_cast<std::int64_t>(values.size()))
        throw std::runtime_error("archive: shape does not match value count for block " + name);
    Block b;
    b.name = name;
    b.dtype = "f64";
    b.shape = shape;
    b.f64 = values;
    blocks_.push_back(std::move(b));
}

void Archive::add_i64(const std::string& name, const std::vector<std::int64_t>& values,
                      const std::vector<std::int64_t>& shape) {
    if (shape_count(shape) != static_cast<std::int64_t>(values.size()))
        throw std::runtime_error("archive: shape does not match value count for block " + name);
    Block b;
    b.name = name;
    b.dtype = "i64";
    b.shape = shape;
    b.i64 = values;
    blocks_.push_back(std::move(b));
}

bool Archive::has(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return true;
    return false;
}

const Archive::Block& Archive::find(const std::string& name) const {
    for (const auto& b : blocks_)
        if (b.name == name) return b;
    throw std::runtime_error("archive: missing block " + name);
}

const std::vector<double>& Archive::f64(const std::string& name) const {
    const Block& b = find(name);
    if (b.dtype != "f64") throw std::runtime_error("archive: block " + name + " is not f64");
    return b.f64;
}

const std::vector<std::int64_t>& Archive::i64(const std::string& name) const {
    const Block& b = find(name);
    if (b.dtype != "i64") throw std::runtime_error("archive: block " + name + " is not i64");
    return b.i64;
}

std::vector<std::int64_t> Archive::shape(const std::string& name) const { return find(name).shape; }

std::vector<std::string> Archive::block_names() const {
    std::vector<std::string> names;
    names.reserve(blocks_.size());
    for (const auto& b : blocks_) names.push_back(b.name);
    return names;
}

std::vector<std::uint8_t> Archive::to_bytes() const {
    nlohmann::json header;
    header["format"] = "drar";
    header["version"] = kFormatVersion;
    header["kind"] = kind_;
    header["meta"] = meta_;

    nlohmann::json jblocks = nlohmann::json::array();
    std::int64_t offset = 0;
    for (const auto& b : blocks_) {
        nlohmann::json jb;
        jb["name"] = b.name;
        jb["dtype"] = b.dtype;
        jb["shape"] = b.shape;
        jb["offset"] = offset;
        const std::int64_t count = shape_count(b.shape);
        jb["count"] = count;
        offset += count * 8;
        jblocks.push_back(jb);
    }
    header["blocks"] = jblocks;

    const std::string htext = header.dump();
    std::vector<std::uint8_t> out;
    out.reserve(8 + htext.size() + static_cast<std::size_t>(offset));
    append_bytes(out, kMagic, 4);
    const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
    append_bytes(out, &hlen, 4);
    append_bytes(out, htext.data(), htext.size());
    for (const auto& b : blocks_) {
        if (b.dtype == "f64")
            append_bytes(out, b.f64.data(), b.f64.size() * 8);
        else
            append_bytes(out, b.i64.data(), b.i64.size() * 8);
    }
    return out;
}

void Archive::save(const std::string& path) const {
    const auto bytes = to_bytes();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("archive: cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("archive: write failed: " + path);
}

Archive Archive::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("archive: input not found: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw std::runtime_error("archive: bad magic in " + path);
    std::uint32_t hlen = 0;
    std::memcpy(&hlen, bytes.data() + 4, 4);
    if (bytes.size() < 8 + static_cast<std::size_t>(hlen))
        throw std::runtime_error("archive: truncated header in " + path);

    const nlohmann::json header = nlohmann::json::parse(
        bytes.begin() + 8, bytes.begin() + 8 + hlen);
    if (header.at("format") != "drar")
        throw std::runtime_error("archive: unknown format in " + path);
    if (header.at("version").get<int>() != kFormatVersion)
        throw std::runtime_error("archive: unsupported format version in " + path);

    Archive a(header.at("kind").get<std::string>());
    a.meta_ = header.at("meta");

    const std::uint8_t* payload = bytes.data() + 8 + hlen;
    const std::size_t payload_size = bytes.size() - 8 - hlen;
    for (const auto& jb : header.at("blocks")) {
        Block b;
        b.name = jb.at("name").get<std::string>();
        b.dtype = jb.at("dtype").get<std::string>();
        b.shape = jb.at("shape").get<std::vector<std::int64_t>>();
        const std::int64_t count = jb.at("count").get<std::int64_t>();
        const std::int64_t offset = jb.at("offset").get<std::int64_t>();
        if (offset < 0 || static_cast<std::size_t>(offset + count * 8) > payload_size)
            throw std::runtime_error("archive: block out of range in " + path);
        if (b.dtype == "f64") {
            b.f64.resize(static_cast<std::size_t>(count));
            std::memcpy(b.f64.data(), payload + offset, static_cast<std::size_t>(count) * 8);
        } else if (b.dtype == "i64") {
            b.i64.resize(static_cast<std::size_t>(count));
            std::memcpy(b.i64.data(), payload + offset, static_cast<std::size_t>(count) * 8);
        } else {
            throw std::runtime_error("archive: unknown dtype " + b.dtype);
        }
        a.blocks_.push_back(std::move(b));
    }
    return a;
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), used only for manifest content hashes.

namespace {

struct Sha256 {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::uint64_t total = 0;
    std::uint8_t buf[64];
    std::size_t buf_len = 0;

    static std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void process(const std::uint8_t* p) {
        static const std::uint32_t k[64] = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::uint32_t w[64];
        for (int i = 0; i < 16; i++)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 64; i++) {
            const std::uint32_t s0 = rotr(w[i - 15], 7) ^ rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            const std::uint32_t s1 = rotr(w[i - 2], 17) ^ rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
        std::uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; i++) {
            const std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            const std::uint32_t ch = (e & f) ^ (~e & g);
            const std::uint32_t t1 = hh + s1 + ch + k[i] + w[i];
            const std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            const std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            const std::uint32_t t2 = s0 + maj;
            hh = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        h[0] += a; h[1] += b; h[2] += c; h[3] += d;
        h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    void update(const std::uint8_t* data, std::size_t n) {
        total += n;
        while (n > 0) {
            const std::size_t take = std::min<std::size_t>(64 - buf_len, n);
            std::memcpy(buf + buf_len, data, take);
            buf_len += take;
            data += take;
            n -= take;
            if (buf_len == 64) {
                process(buf);
                buf_len = 0;
            }
        }
    }

    std::string finish() {
        const std::uint64_t bits = total * 8;
        const std::uint8_t one = 0x80;
        update(&one, 1);
        const std::uint8_t zero = 0;
        while (buf_len != 56) update(&zero, 1);
        std::uint8_t len[8];
        for (int i = 0; i < 8; i++) len[i] = static_cast<std::uint8_t>(bits >> (56 - 8 * i));
        update(len, 8);
        static const char* hex = "0123456789abcdef";
        std::string out;
        out.reserve(64);
        for (int i = 0; i < 8; i++)
            for (int b = 3; b >= 0; b--) {
                const std::uint8_t byte = static_cast<std::uint8_t>(h[i] >> (8 * b));
                out.push_back(hex[byte >> 4]);
                out.push_back(hex[byte & 0xf]);
            }
        return out;
    }
};

}  // namespace

std::string sha256_bytes(const std::uint8_t* data, std::size_t n) {
    Sha256 s;
    s.update(data, n);
    return s.finish();
}

std::string sha256_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for hashing: " + path);
    Sha256 s;
    char chunk[65536];
    while (f) {
        f.read(chunk, sizeof(chunk));
        s.update(reinterpret_cast<const std::uint8_t*>(chunk),
                 static_cast<std::size_t>(f.gcount()));
    }
    return s.finish();
}

}  // namespace dynrec
