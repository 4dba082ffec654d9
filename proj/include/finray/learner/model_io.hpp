#pragma once

// TFRM model file (little-endian):
//   "TFRM" | u16 version | config JSON (u32 length + bytes) | 32B dataset hash
//   | f64 depth_min, depth_max, location_min, location_max
//   | u32 tensor count, each: name (u32 length + bytes) | u8 rank | u32 dims... | f32 data
//   | u32 epochs, each: f64 train_mse | f64 val_mse

#include "finray/binary_io.hpp"
#include "finray/learner/model.hpp"

#include <string>
#include <vector>

namespace finray::learner {

inline constexpr char kModelMagic[4] = {'T', 'F', 'R', 'M'};
inline constexpr std::uint16_t kModelVersion = 1;

namespace detail {

template <class T>
struct NamedTensor {
    std::string name;
    Storage<T>* values;
};

template <class T>
std::vector<NamedTensor<T>> state_tensors(Model<T>& m)
{
    std::vector<NamedTensor<T>> out;
    for (auto* p : m.net.params())
        out.push_back({p->name, &p->value});
    for (auto* b : m.net.buffers())
        out.push_back({b->name, &b->value});
    return out;
}

} // namespace detail

template <class T>
std::vector<std::uint8_t> serialize_model(Model<T>& m)
{
    io::ByteWriter w;
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(kModelMagic), 4});
    w.put(kModelVersion);
    w.put_string(to_json(m.config).dump());
    w.put_bytes(m.dataset_hash);
    const auto& n = m.config.normalization;
    w.put(n.depth_min);
    w.put(n.depth_max);
    w.put(n.location_min);
    w.put(n.location_max);
    const auto tensors = detail::state_tensors(m);
    w.put(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        w.put_string(t.name);
        w.put(static_cast<std::uint8_t>(1));
        w.put(static_cast<std::uint32_t>(t.values->size()));
        for (T v : *t.values)
            w.put(static_cast<float>(v));
    }
    w.put(static_cast<std::uint32_t>(m.log.size()));
    for (const auto& e : m.log) {
        w.put(e.train_mse);
        w.put(e.val_mse);
    }
    return w.bytes();
}

template <class T>
Model<T> deserialize_model(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, kModelMagic))
        throw Error(ErrorKind::NotADataset, "not a model file (bad magic)");
    io::ByteReader r(bytes.subspan(4));
    const auto version = r.get<std::uint16_t>();
    if (version != kModelVersion)
        throw Error(ErrorKind::VersionMismatch, "unsupported model version " + std::to_string(version));
    ModelConfig cfg;
    try {
        cfg = model_config_from_json(Json::parse(r.get_string()));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::Corrupt, std::string("model config JSON: ") + e.what());
    }
    auto m = build_model<T>(cfg, 0);
    auto hash = r.get_bytes(32);
    std::copy(hash.begin(), hash.end(), m.dataset_hash.begin());
    auto& n = m.config.normalization;
    n.depth_min = r.get<double>();
    n.depth_max = r.get<double>();
    n.location_min = r.get<double>();
    n.location_max = r.get<double>();

    auto tensors = detail::state_tensors(m);
    const auto count = r.get<std::uint32_t>();
    if (count != tensors.size())
        throw Error(ErrorKind::Corrupt, "model tensor count does not match its architecture");
    for (auto& t : tensors) {
        const auto name = r.get_string();
        if (name != t.name)
            throw Error(ErrorKind::Corrupt, "model tensor '" + name + "' found where '" + t.name + "' expected");
        const auto rank = r.get<std::uint8_t>();
        std::size_t size = 1;
        for (std::uint8_t k = 0; k < rank; ++k)
            size *= r.get<std::uint32_t>();
        if (size != t.values->size())
            throw Error(ErrorKind::Corrupt, "model tensor '" + name + "' has the wrong size");
        for (auto& v : *t.values)
            v = static_cast<T>(r.get<float>());
    }
    const auto epochs = r.get<std::uint32_t>();
    for (std::uint32_t e = 0; e < epochs; ++e) {
        EpochLog entry{};
        entry.train_mse = r.get<double>();
        entry.val_mse = r.get<double>();
        m.log.push_back(entry);
    }
    if (r.remaining() != 0)
        throw Error(ErrorKind::Corrupt, "trailing bytes after model payload");
    return m;
}

template <class T>
void write_model(Model<T>& m, const std::string& path)
{
    io::write_file(path, serialize_model(m));
}

template <class T = float>
Model<T> read_model(const std::string& path)
{
    return deserialize_model<T>(io::read_file(path));
}

} // namespace finray::learner
