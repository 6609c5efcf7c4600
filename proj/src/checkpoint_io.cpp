#include "pxgen/errors.hpp"
#include "pxgen/model.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace pxgen {

namespace {

constexpr std::string_view kMagic = "PXGENCKP";
constexpr int kFormatVersion = 1;

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

std::uint64_t read_u64_le(std::string_view bytes, std::size_t offset) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
    }
    return v;
}

std::string payload_bytes(const VaeParams& params) {
    std::string out;
    const Vector flat = params.flatten();
    out.reserve(flat.size() * 8);
    for (double v : flat) {
        append_u64_le(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

nlohmann::json layer_shapes(const std::vector<DenseLayer>& layers) {
    auto shapes = nlohmann::json::array();
    for (const auto& l : layers) {
        shapes.push_back({l.out_dim(), l.in_dim()});
    }
    return shapes;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    ckpt.params.validate();
    nlohmann::json header = {
        {"format", "pxgen-checkpoint"},
        {"version", kFormatVersion},
        {"epoch", ckpt.epoch},
        {"learning_rate", ckpt.learning_rate},
        {"seed", ckpt.seed},
        {"image_width", ckpt.params.image_width},
        {"image_height", ckpt.params.image_height},
        {"latent_dim", ckpt.params.latent_dim},
        {"hidden_dims", ckpt.params.hidden_dims},
        {"encoder_shapes", layer_shapes(ckpt.params.encoder)},
        {"decoder_shapes", layer_shapes(ckpt.params.decoder)},
        {"parameter_count", ckpt.params.parameter_count()},
    };
    const std::string text = header.dump();
    std::string out(kMagic);
    append_u64_le(out, text.size());
    out += text;
    out += payload_bytes(ckpt.params);
    return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
    if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
        throw FormatError("checkpoint: bad magic at offset 0");
    }
    const std::uint64_t header_len = read_u64_le(bytes, kMagic.size());
    const std::size_t header_at = kMagic.size() + 8;
    if (header_len > bytes.size() - header_at) {
        throw FormatError("checkpoint: header truncated at offset " + std::to_string(header_at));
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(header_at, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        if (header.at("format") != "pxgen-checkpoint" || header.at("version") != kFormatVersion) {
            throw FormatError("checkpoint: unsupported format/version");
        }
        ckpt.epoch = header.at("epoch").get<int>();
        ckpt.learning_rate = header.at("learning_rate").get<double>();
        ckpt.seed = header.at("seed").get<std::uint64_t>();
        ckpt.params = zero_vae(header.at("image_width").get<int>(),
                               header.at("image_height").get<int>(),
                               header.at("latent_dim").get<std::size_t>(),
                               header.at("hidden_dims").get<std::vector<std::size_t>>());
        if (header.at("encoder_shapes") != layer_shapes(ckpt.params.encoder) ||
            header.at("decoder_shapes") != layer_shapes(ckpt.params.decoder) ||
            header.at("parameter_count").get<std::size_t>() != ckpt.params.parameter_count()) {
            throw FormatError("checkpoint: declared shapes are inconsistent");
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint: header field error: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }

    const std::size_t payload_at = header_at + header_len;
    const std::size_t count = ckpt.params.parameter_count();
    if (bytes.size() - payload_at != count * 8) {
        throw FormatError("checkpoint: payload at offset " + std::to_string(payload_at) +
                          " holds " + std::to_string(bytes.size() - payload_at) +
                          " bytes, expected " + std::to_string(count * 8));
    }
    Vector flat(count);
    for (std::size_t i = 0; i < count; ++i) {
        flat[i] = std::bit_cast<double>(read_u64_le(bytes, payload_at + 8 * i));
    }
    ckpt.params.assign_flat(flat);
    return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const std::string bytes = serialize_checkpoint(ckpt);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

std::string params_checksum(const VaeParams& params) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : payload_bytes(params)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace pxgen
