#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dynrec {

/// Single-file container used by every on-disk format: a JSON header
/// describing named blocks, followed by raw little-endian payload bytes.
/// Layout: 4-byte magic "DRAR", uint32 LE header length, header JSON,
/// then the block payload. Block offsets are relative to the payload
/// start so the header text never depends on its own size.
///
/// Complex data is stored as trailing (real, imag) float64 pairs.
class Archive {
public:
    static constexpr int kFormatVersion = 1;

    Archive() = default;
    explicit Archive(std::string kind);

    /// Free-form metadata (shapes, scalar settings). Serialized into the header.
    nlohmann::json& meta() { return meta_; }
    const nlohmann::json& meta() const { return meta_; }

    const std::string& kind() const { return kind_; }

    void add_f64(const std::string& name, const std::vector<double>& values,
                 const std::vector<std::int64_t>& shape);
    void add_i64(const std::string& name, const std::vector<std::int64_t>& values,
                 const std::vector<std::int64_t>& shape);

    bool has(const std::string& name) const;
    const std::vector<double>& f64(const std::string& name) const;
    const std::vector<std::int64_t>& i64(const std::string& name) const;
    std::vector<std::int64_t> shape(const std::string& name) const;
    std::vector<std::string> block_names() const;

    void save(const std::string& path) const;
    static Archive load(const std::string& path);

    /// Serialized bytes, identical to what save() writes.
    std::vector<std::uint8_t> to_bytes() const;

private:
    struct Block {
        std::string name;
        std::string dtype;  // "f64" | "i64"
        std::vector<std::int64_t> shape;
        std::vector<double> f64;
        std::vector<std::int64_t> i64;
    };

    const Block& find(const std::string& name) const;

    std::string kind_;
    nlohmann::json meta_ = nlohmann::json::object();
    std::vector<Block> blocks_;
};

/// Hex SHA-256 of a file's bytes; used for manifest content hashes.
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const std::uint8_t* data, std::size_t n);

}  // namespace dynrec
