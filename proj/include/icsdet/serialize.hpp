#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "icsdet/dataset.hpp"
#include "icsdet/neural.hpp"
#include "icsdet/trees.hpp"

namespace icsdet {

// Little-endian binary encoder. Integers are fixed width, doubles are their
// IEEE-754 bit pattern, strings are length-prefixed.
class ByteWriter {
public:
    void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void str(std::string_view s);
    void f64_array(std::span<const double> values);
    void tag(std::string_view four_cc);

    const std::string& bytes() const noexcept { return bytes_; }

private:
    std::string bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::string str();
    std::vector<double> f64_array();
    void expect_tag(std::string_view four_cc);
    bool at_end() const noexcept { return pos_ == bytes_.size(); }

private:
    std::string_view take(std::size_t n);

    std::string_view bytes_;
    std::size_t pos_ = 0;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_mlp(ByteWriter& out, const Mlp& model);
Mlp read_mlp(ByteReader& in);
void write_tree(ByteWriter& out, const DecisionTree& tree);
DecisionTree read_tree(ByteReader& in);
void write_normalization(ByteWriter& out, const NormalizationParams& params);
NormalizationParams read_normalization(ByteReader& in);

// Standalone network file: magic "ICSDETNN", format version, one MLP record.
std::string serialize_mlp(const Mlp& model);
Mlp deserialize_mlp(std::string_view bytes);

void write_binary_file(const std::string& path, std::string_view bytes);

}  // namespace icsdet
