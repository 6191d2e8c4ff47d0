#include "amrl/checkpoint.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "amrl/errors.hpp"

namespace amrl {

using nlohmann::json;

namespace {

std::string blob_path(const std::string& manifest_path) { return manifest_path + ".bin"; }

void append_tensor_entry(json& list, const std::string& name, const Tensor& t, std::uint64_t& offset) {
    list.push_back({{"name", name}, {"shape", t.shape()}, {"dtype", "f64"}, {"byte_offset", offset}});
    offset += t.numel() * sizeof(double);
}

void write_blob(std::ofstream& out, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
}

Tensor read_blob_tensor(std::ifstream& in, const json& entry) {
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    Tensor t(shape);
    in.seekg(static_cast<std::streamoff>(entry.at("byte_offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw config_error("checkpoint blob truncated while reading " + entry.at("name").get<std::string>());
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const NetworkParams& params, const AdamState* adam,
                     const json& meta) {
    json manifest;
    manifest["format"] = "amrl-checkpoint-v1";
    manifest["blob"] = std::filesystem::path(blob_path(path)).filename().string();
    if (!meta.is_null() && !meta.empty()) manifest["meta"] = meta;

    json tensors = json::array();
    std::uint64_t offset = 0;
    for (std::size_t i = 0; i < params.size(); ++i) append_tensor_entry(tensors, params.name(i), params.value(i), offset);
    if (adam) {
        manifest["adam"] = {{"step_count", adam->step_count}};
        for (std::size_t i = 0; i < params.size(); ++i)
            append_tensor_entry(tensors, "adam.m." + params.name(i), adam->m[i], offset);
        for (std::size_t i = 0; i < params.size(); ++i)
            append_tensor_entry(tensors, "adam.v." + params.name(i), adam->v[i], offset);
    }
    manifest["tensors"] = std::move(tensors);

    std::ofstream mf(path);
    if (!mf) throw config_error("cannot write checkpoint manifest " + path);
    mf << manifest.dump(2) << "\n";

    std::ofstream bf(blob_path(path), std::ios::binary);
    if (!bf) throw config_error("cannot write checkpoint blob " + blob_path(path));
    for (std::size_t i = 0; i < params.size(); ++i) write_blob(bf, params.value(i));
    if (adam) {
        for (std::size_t i = 0; i < params.size(); ++i) write_blob(bf, adam->m[i]);
        for (std::size_t i = 0; i < params.size(); ++i) write_blob(bf, adam->v[i]);
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream mf(path);
    if (!mf) throw config_error("cannot open checkpoint manifest " + path);
    json manifest = json::parse(mf);
    if (manifest.value("format", "") != "amrl-checkpoint-v1")
        throw config_error("unrecognized checkpoint format in " + path);

    const std::string blob =
        (std::filesystem::path(path).parent_path() / manifest.at("blob").get<std::string>()).string();
    std::ifstream bf(blob, std::ios::binary);
    if (!bf) throw config_error("cannot open checkpoint blob " + blob);

    Checkpoint ck;
    if (manifest.contains("meta")) ck.meta = manifest["meta"];

    const bool has_adam = manifest.contains("adam");
    AdamState adam;
    if (has_adam) adam.step_count = manifest["adam"].at("step_count").get<long>();

    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        if (name.rfind("adam.m.", 0) == 0) {
            adam.m.push_back(read_blob_tensor(bf, entry));
        } else if (name.rfind("adam.v.", 0) == 0) {
            adam.v.push_back(read_blob_tensor(bf, entry));
        } else {
            ck.params.add(name, read_blob_tensor(bf, entry));
        }
    }
    if (has_adam) {
        if (adam.m.size() != ck.params.size() || adam.v.size() != ck.params.size())
            throw config_error("checkpoint Adam state does not cover all parameters in " + path);
        ck.adam = std::move(adam);
    }
    return ck;
}

}  // namespace amrl
