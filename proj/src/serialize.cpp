#include "icsdet/serialize.hpp"

#include <bit>
#include <fstream>

#include "icsdet/error.hpp"

namespace icsdet {

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::str(std::string_view s) {
    u64(s.size());
    bytes_.append(s);
}

void ByteWriter::f64_array(std::span<const double> values) {
    u64(values.size());
    for (double v : values) f64(v);
}

void ByteWriter::tag(std::string_view four_cc) { bytes_.append(four_cc.substr(0, 4)); }

std::string_view ByteReader::take(std::size_t n) {
    if (bytes_.size() - pos_ < n) fail(ErrorCode::BadModelFile, "model file truncated");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
}

std::uint8_t ByteReader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::uint32_t ByteReader::u32() {
    auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::uint64_t ByteReader::u64() {
    auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str() {
    const auto n = u64();
    return std::string(take(n));
}

std::vector<double> ByteReader::f64_array() {
    const auto n = u64();
    if (n > (bytes_.size() - pos_) / 8) fail(ErrorCode::BadModelFile, "model file truncated");
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
}

void ByteReader::expect_tag(std::string_view four_cc) {
    auto got = take(4);
    if (got != four_cc.substr(0, 4)) {
        fail(ErrorCode::BadModelFile, "expected section '" + std::string(four_cc) + "', found '" +
                                          std::string(got) + "'");
    }
}

void write_mlp(ByteWriter& out, const Mlp& model) {
    out.tag("MLP ");
    out.f64(model.dropout_rate());
    out.u32(static_cast<std::uint32_t>(model.layers().size()));
    for (const auto& layer : model.layers()) {
        out.u32(static_cast<std::uint32_t>(layer.in_dim()));
        out.u32(static_cast<std::uint32_t>(layer.out_dim()));
        out.u8(static_cast<std::uint8_t>(layer.activation));
        out.f64_array(layer.weights.data());
        out.f64_array(layer.bias);
    }
}

Mlp read_mlp(ByteReader& in) {
    in.expect_tag("MLP ");
    const double dropout = in.f64();
    const auto n_layers = in.u32();
    std::vector<DenseLayer> layers(n_layers);
    for (auto& layer : layers) {
        const auto n_in = in.u32();
        const auto n_out = in.u32();
        const auto act = in.u8();
        if (act > static_cast<std::uint8_t>(Activation::Identity)) {
            fail(ErrorCode::BadModelFile, "unknown activation tag " + std::to_string(act));
        }
        layer.activation = static_cast<Activation>(act);
        auto w = in.f64_array();
        if (w.size() != static_cast<std::size_t>(n_in) * n_out) {
            fail(ErrorCode::BadModelFile, "layer weight count does not match its dims");
        }
        layer.weights = Matrix(n_out, n_in, std::move(w));
        layer.bias = in.f64_array();
    }
    try {
        return Mlp(std::move(layers), dropout);
    } catch (const Error& e) {
        fail(ErrorCode::BadModelFile, std::string("invalid network: ") + e.what());
    }
}

void write_tree(ByteWriter& out, const DecisionTree& tree) {
    out.tag("TREE");
    out.u64(tree.nodes().size());
    for (const auto& n : tree.nodes()) {
        if (n.leaf) {
            out.u8('L');
            out.f64(n.probability);
            out.u64(n.sample_count);
        } else {
            out.u8('S');
            out.u64(n.feature);
            out.f64(n.threshold);
            out.u64(n.sample_count);
            out.u64(n.left);
            out.u64(n.right);
        }
    }
}

DecisionTree read_tree(ByteReader& in) {
    in.expect_tag("TREE");
    const auto count = in.u64();
    std::vector<TreeNode> nodes;
    for (std::uint64_t i = 0; i < count; ++i) {
        TreeNode n;
        const auto kind = in.u8();
        if (kind == 'L') {
            n.leaf = true;
            n.probability = in.f64();
            n.sample_count = in.u64();
        } else if (kind == 'S') {
            n.leaf = false;
            n.feature = in.u64();
            n.threshold = in.f64();
            n.sample_count = in.u64();
            n.left = in.u64();
            n.right = in.u64();
        } else {
            fail(ErrorCode::BadModelFile, "unknown tree node tag");
        }
        nodes.push_back(n);
    }
    try {
        return DecisionTree(std::move(nodes));
    } catch (const Error& e) {
        fail(ErrorCode::BadModelFile, std::string("invalid tree: ") + e.what());
    }
}

void write_normalization(ByteWriter& out, const NormalizationParams& params) {
    out.tag("NORM");
    out.f64_array(params.min);
    out.f64_array(params.max);
}

NormalizationParams read_normalization(ByteReader& in) {
    in.expect_tag("NORM");
    NormalizationParams p;
    p.min = in.f64_array();
    p.max = in.f64_array();
    if (p.min.size() != p.max.size()) fail(ErrorCode::BadModelFile, "normalization arrays differ in length");
    return p;
}

std::string serialize_mlp(const Mlp& model) {
    ByteWriter out;
    out.tag("ICSD");
    out.tag("ETNN");
    out.u32(kModelFormatVersion);
    write_mlp(out, model);
    return out.bytes();
}

Mlp deserialize_mlp(std::string_view bytes) {
    ByteReader in(bytes);
    in.expect_tag("ICSD");
    in.expect_tag("ETNN");
    const auto version = in.u32();
    if (version != kModelFormatVersion) {
        fail(ErrorCode::BadModelFile, "unsupported network file version " + std::to_string(version));
    }
    auto model = read_mlp(in);
    if (!in.at_end()) fail(ErrorCode::BadModelFile, "trailing bytes after network record");
    return model;
}

void write_binary_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "failed writing '" + path + "'");
}

}  // namespace icsdet
