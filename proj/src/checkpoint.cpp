#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "slicecast/errors.hpp"
#include "slicecast/model.hpp"

namespace slicecast {

namespace {

// The blob is little-endian on disk regardless of host order.
void to_little_endian(std::vector<std::uint64_t>& words) {
    if constexpr (std::endian::native == std::endian::big) {
        for (auto& w : words) {
            w = ((w & 0x00000000000000ffULL) << 56) | ((w & 0x000000000000ff00ULL) << 40) |
                ((w & 0x0000000000ff0000ULL) << 24) | ((w & 0x00000000ff000000ULL) << 8) |
                ((w & 0x000000ff00000000ULL) >> 8) | ((w & 0x0000ff0000000000ULL) >> 24) |
                ((w & 0x00ff000000000000ULL) >> 40) | ((w & 0xff00000000000000ULL) >> 56);
        }
    }
}

std::string hash_hex(std::uint64_t h) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

void save_checkpoint(const std::string& base, const ForecastModel& model,
                     std::uint64_t config_hash) {
    nlohmann::ordered_json manifest;
    manifest["schema"] = "slicecast.checkpoint/1";
    manifest["model"] = model.tag();
    manifest["channels"] = model.channels();
    manifest["config"] = model_config_to_json(model.config());
    manifest["config_hash"] = hash_hex(config_hash);
    manifest["blob"] = {{"format", "f64-le"},
                        {"count", model.parameter_count()},
                        {"file", base.substr(base.find_last_of('/') + 1) + ".bin"}};
    manifest["parameters"] = nlohmann::ordered_json::array();

    std::vector<std::uint64_t> words;
    words.reserve(model.parameter_count());
    for (const auto& [name, t] : model.parameters()) {
        manifest["parameters"].push_back(
            {{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
        for (double v : t.data()) {
            std::uint64_t w;
            std::memcpy(&w, &v, sizeof(w));
            words.push_back(w);
        }
    }
    to_little_endian(words);

    {
        std::ofstream out(base + ".json");
        if (!out) throw Error("cannot write checkpoint manifest '" + base + ".json'");
        out << manifest.dump(2) << '\n';
    }
    {
        std::ofstream out(base + ".bin", std::ios::binary);
        if (!out) throw Error("cannot write checkpoint blob '" + base + ".bin'");
        out.write(reinterpret_cast<const char*>(words.data()),
                  static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
    }
}

LoadedCheckpoint load_checkpoint(const std::string& base) {
    std::ifstream in(base + ".json");
    if (!in) throw Error("cannot read checkpoint manifest '" + base + ".json'");
    nlohmann::ordered_json manifest = nlohmann::ordered_json::parse(in);

    if (manifest.value("schema", "") != "slicecast.checkpoint/1") {
        throw ValidationError("checkpoint: unknown schema '" + manifest.value("schema", "") + "'");
    }
    const std::string tag = manifest.at("model").get<std::string>();
    const int channels = manifest.at("channels").get<int>();
    const ModelConfig config = model_config_from_json(manifest.at("config"));
    if (manifest.at("blob").value("format", "") != "f64-le") {
        throw ValidationError("checkpoint: unsupported blob format");
    }

    LoadedCheckpoint loaded;
    loaded.model = make_model(tag, config, channels);
    loaded.config_hash =
        std::stoull(manifest.value("config_hash", "0"), nullptr, 16);

    // Validate the manifest registry against the freshly built model before
    // touching any parameter values.
    const auto& params = loaded.model->parameters();
    const auto& entries = manifest.at("parameters");
    if (entries.size() != params.size()) {
        throw ValidationError("checkpoint: expected " + std::to_string(params.size()) +
                              " parameters, manifest lists " + std::to_string(entries.size()));
    }
    std::size_t total = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& e = entries[i];
        const auto& [name, t] = params[i];
        if (e.at("name").get<std::string>() != name || e.at("rows").get<int>() != t.rows() ||
            e.at("cols").get<int>() != t.cols()) {
            throw ValidationError("checkpoint: parameter " + std::to_string(i) +
                                  " does not match model shape for '" + name + "'");
        }
        total += t.size();
    }
    if (manifest.at("blob").at("count").get<std::size_t>() != total) {
        throw ValidationError("checkpoint: blob count does not match parameter shapes");
    }

    std::ifstream blob(base + ".bin", std::ios::binary);
    if (!blob) throw Error("cannot read checkpoint blob '" + base + ".bin'");
    std::vector<std::uint64_t> words(total);
    blob.read(reinterpret_cast<char*>(words.data()),
              static_cast<std::streamsize>(total * sizeof(std::uint64_t)));
    if (static_cast<std::size_t>(blob.gcount()) != total * sizeof(std::uint64_t)) {
        throw ValidationError("checkpoint: blob is shorter than the manifest promises");
    }
    to_little_endian(words);  // symmetric swap back to host order

    std::size_t offset = 0;
    for (const auto& [name, t] : params) {
        nn::Tensor handle = t;
        auto& dst = handle.mutable_data();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            double v;
            std::memcpy(&v, &words[offset + i], sizeof(v));
            dst[i] = v;
        }
        offset += dst.size();
    }
    return loaded;
}

}  // namespace slicecast
