#include "tensor/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace hypercqa::tensor {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are written little-endian");

namespace {

constexpr char kMagic[8] = {'H', 'C', 'Q', 'A', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
T read_pod(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) throw Error(ErrorKind::IoError, "truncated checkpoint");
    return value;
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path,
                     const std::map<std::string, std::string>& manifest_extra) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out.write(kMagic, sizeof kMagic);
    write_pod(out, kVersion);
    write_pod(out, static_cast<std::uint64_t>(params.names().size()));
    for (const std::string& name : params.names()) {
        const Tensor& tensor = params.get(name);
        write_pod(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<long>(name.size()));
        write_pod(out, static_cast<std::uint32_t>(tensor.shape.size()));
        for (std::size_t dim : tensor.shape) write_pod(out, static_cast<std::uint64_t>(dim));
        out.write(reinterpret_cast<const char*>(tensor.data->data()),
                  static_cast<long>(tensor.numel() * sizeof(double)));
    }
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path);

    nlohmann::ordered_json manifest;
    manifest["format"] = "hcqa-checkpoint";
    manifest["version"] = kVersion;
    nlohmann::ordered_json entries = nlohmann::ordered_json::array();
    for (const std::string& name : params.names()) {
        entries.push_back({{"name", name}, {"shape", params.get(name).shape}});
    }
    manifest["parameters"] = std::move(entries);
    manifest["meta"] = manifest_extra;
    std::ofstream mout(path + ".manifest.json", std::ios::binary);
    if (!mout) throw Error(ErrorKind::IoError, "cannot write " + path + ".manifest.json");
    mout << manifest.dump(2) << '\n';
}

ParamStore load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw Error(ErrorKind::ParseError, path + " is not a checkpoint");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kVersion) {
        throw Error(ErrorKind::ParseError, "unsupported checkpoint version " + std::to_string(version));
    }
    ParamStore params;
    const auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<std::uint32_t>(in);
        std::vector<std::size_t> shape(rank);
        for (auto& dim : shape) dim = static_cast<std::size_t>(read_pod<std::uint64_t>(in));
        Tensor& tensor = params.create_zeros(name, shape);
        in.read(reinterpret_cast<char*>(tensor.data->data()),
                static_cast<long>(tensor.numel() * sizeof(double)));
        if (!in) throw Error(ErrorKind::IoError, "truncated checkpoint payload");
    }
    return params;
}

std::map<std::string, std::string> load_manifest_extra(const std::string& path) {
    std::ifstream in(path + ".manifest.json");
    if (!in) return {};
    nlohmann::json manifest = nlohmann::json::parse(in, nullptr, false);
    if (manifest.is_discarded() || !manifest.contains("meta")) return {};
    std::map<std::string, std::string> extra;
    for (const auto& [key, value] : manifest.at("meta").items()) {
        extra[key] = value.get<std::string>();
    }
    return extra;
}

}  // namespace hypercqa::tensor
