#pragma once

// Synthetic tactile datasets: contact sampling, indenter patches, frame synthesis,
// train/val splitting and the TFRD binary file format.
//
// TFRD layout (little-endian):
//   "TFRD" | u16 version | 32B design hash | u16 resolution | u32 n
//   | f64 depth_min, depth_max, loc_min, loc_max | u64 seed
//   then n times: packed frame (ceil(res^2/8) bytes) | f64 depth | f64 location_from_tip
//                 | u8 indenter id | u8 split tag

#include "finray/binary_io.hpp"
#include "finray/error.hpp"
#include "finray/hash.hpp"
#include "finray/json_util.hpp"
#include "finray/mechanics.hpp"
#include "finray/parallel.hpp"
#include "finray/schema.hpp"
#include "finray/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace finray::datagen {

using mechanics::FingerDesign;
using sensor::CameraConfig;
using sensor::MarkerFrame;
using finray::to_json;

// Locations here are measured from the fingertip; mechanics uses height above the
// hinge, y = L - location_from_tip.
struct ContactRanges {
    double depth_min_mm = 1.0;
    double depth_max_mm = 5.5;
    double location_min_mm = 10.0;
    double location_max_mm = 50.0;

    void validate(const FingerDesign& design) const
    {
        require(depth_min_mm < depth_max_mm, "depth range must satisfy min < max");
        require(location_min_mm < location_max_mm, "location range must satisfy min < max");
        require(depth_min_mm >= 0.0, "depth range must be non-negative");
        require(location_min_mm >= 0.0 && location_max_mm <= design.finger_length_mm,
                "location range must lie within the finger");
    }

    bool contains(double depth, double location_from_tip) const
    {
        return depth >= depth_min_mm && depth <= depth_max_mm && location_from_tip >= location_min_mm &&
               location_from_tip <= location_max_mm;
    }
};

inline Json to_json(const ContactRanges& r)
{
    return {{"depth_min_mm", r.depth_min_mm},
            {"depth_max_mm", r.depth_max_mm},
            {"location_min_mm", r.location_min_mm},
            {"location_max_mm", r.location_max_mm}};
}

inline ContactRanges ranges_from_json(const Json& j, const std::string& ctx = "ranges")
{
    ContactRanges r;
    ObjectReader(j, ctx)
        .get("depth_min_mm", r.depth_min_mm)
        .get("depth_max_mm", r.depth_max_mm)
        .get("location_min_mm", r.location_min_mm)
        .get("location_max_mm", r.location_max_mm)
        .finish();
    return r;
}

inline double to_hinge_height(const FingerDesign& design, double location_from_tip_mm)
{
    return design.finger_length_mm - location_from_tip_mm;
}

struct ContactTarget {
    double depth_mm;
    double location_from_tip_mm;
};

// Uniform i.i.d. draws over the depth x location rectangle.
inline std::vector<ContactTarget> sample_contacts(const ContactRanges& ranges, std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> depth(ranges.depth_min_mm, ranges.depth_max_mm);
    std::uniform_real_distribution<double> loc(ranges.location_min_mm, ranges.location_max_mm);
    std::vector<ContactTarget> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = depth(rng);
        const double l = loc(rng);
        out.push_back({d, l});
    }
    return out;
}

enum class IndenterKind : std::uint8_t { Circular, Flat };

struct IndenterShape {
    IndenterKind kind = IndenterKind::Circular;
    double size_mm = 10.0; // diameter (circular) or width (flat)
    int patch_points = 0;  // flat only; 0 picks max(3, ceil(width / 1 mm))

    std::string name() const
    {
        const auto size = std::to_string(static_cast<int>(std::lround(size_mm)));
        return (kind == IndenterKind::Circular ? "circular_" : "flat_") + size;
    }

    int point_count() const
    {
        if (kind == IndenterKind::Circular)
            return 1;
        if (patch_points > 0)
            return patch_points;
        return std::max(3, static_cast<int>(std::ceil(size_mm / 1.0 - 1e-12)));
    }
};

// Indenter ids stored in TFRD files. Id 0 is the training indenter.
inline const std::vector<IndenterShape>& standard_indenters()
{
    static const std::vector<IndenterShape> kShapes = {
        {IndenterKind::Circular, 10.0}, {IndenterKind::Flat, 1.0}, {IndenterKind::Flat, 2.0},
        {IndenterKind::Flat, 3.0},      {IndenterKind::Flat, 5.0}, {IndenterKind::Flat, 7.0},
        {IndenterKind::Circular, 30.0},
    };
    return kShapes;
}

inline const IndenterShape& indenter_by_id(std::uint8_t id)
{
    const auto& shapes = standard_indenters();
    require(id < shapes.size(), "unknown indenter id " + std::to_string(id));
    return shapes[id];
}

struct PointContact {
    double location_mm; // height above the hinge
    double depth_mm;
};

// A circular indenter touches at its tangent point; a flat one is sampled at q equally
// spaced points across its width, all at the commanded depth, centred on `location_mm`.
inline std::vector<PointContact> indenter_patch(const IndenterShape& shape, double location_mm, double depth_mm,
                                                double finger_length_mm)
{
    require(shape.size_mm > 0.0, "indenter dimension must be positive");
    require(depth_mm >= 0.0, "depth must be non-negative");
    if (shape.kind == IndenterKind::Circular) {
        require(location_mm >= 0.0 && location_mm <= finger_length_mm, "indenter patch extends beyond the finger");
        return {{location_mm, depth_mm}};
    }
    const double half = 0.5 * shape.size_mm;
    require(location_mm - half >= 0.0 && location_mm + half <= finger_length_mm,
            "indenter patch extends beyond the finger");
    const int q = shape.point_count();
    std::vector<PointContact> pts;
    pts.reserve(static_cast<std::size_t>(q));
    const double step = shape.size_mm / static_cast<double>(q - 1);
    for (int j = 0; j < q; ++j) {
        // Mirror pairs about the centre so the centroid is exact.
        const double offset = (static_cast<double>(j) - 0.5 * (q - 1)) * step;
        pts.push_back({location_mm + offset, depth_mm});
    }
    return pts;
}

// Each patch point carries 1/q of its own coupled contact force; beam states superpose.
inline mechanics::BeamState patch_beam_state(const FingerDesign& design, const std::vector<PointContact>& patch)
{
    mechanics::BeamState total = mechanics::zero_beam_state(design);
    const double share = 1.0 / static_cast<double>(patch.size());
    for (const auto& p : patch) {
        const double f = mechanics::coupled_contact_force(design, p.depth_mm, p.location_mm) * share;
        total += mechanics::beam_state_for_force(design, f, p.location_mm);
    }
    return total;
}

struct Sample {
    MarkerFrame frame;
    double depth_mm = 0.0;
    double location_from_tip_mm = 0.0;
    std::uint8_t indenter_id = 0;
    bool extrapolated = false;
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
};

inline Sample synth_sample(const FingerDesign& design, const CameraConfig& camera, const ContactTarget& target,
                           std::uint8_t indenter_id = 0, const ContactRanges* ranges = nullptr)
{
    const double y = to_hinge_height(design, target.location_from_tip_mm);
    const auto patch = indenter_patch(indenter_by_id(indenter_id), y, target.depth_mm, design.finger_length_mm);
    mechanics::BeamState state = patch.size() == 1
                                     ? mechanics::beam_state(design, target.depth_mm, y)
                                     : patch_beam_state(design, patch);
    Sample s;
    s.depth_mm = target.depth_mm;
    s.location_from_tip_mm = target.location_from_tip_mm;
    s.indenter_id = indenter_id;
    s.extrapolated = ranges && !ranges->contains(target.depth_mm, target.location_from_tip_mm);
    s.frame = sensor::render_state(design, state, camera);
    s.frame.provenance.design_hash = design_hash(design, camera);
    s.frame.provenance.depth_mm = target.depth_mm;
    s.frame.provenance.location_from_tip_mm = target.location_from_tip_mm;
    return s;
}

enum class SplitTag : std::uint8_t { Train = 0, Val = 1, Unassigned = 2 };

struct Dataset {
    std::vector<Sample> samples;
    std::vector<SplitTag> split;
    ContactRanges ranges;
    Digest design_hash{};
    int resolution = 0;
    std::uint64_t seed = 0;

    std::size_t size() const { return samples.size(); }

    std::vector<std::size_t> indices(SplitTag tag) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < split.size(); ++i)
            if (split[i] == tag)
                out.push_back(i);
        return out;
    }
};

// Assigns round-half-up(n * ratio) samples to train via a seeded uniform permutation.
inline Dataset split_dataset(Dataset ds, double ratio, std::uint64_t seed)
{
    require(ratio > 0.0 && ratio < 1.0, "split ratio must lie in (0, 1)");
    const std::size_t n = ds.size();
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 0.5));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    ds.split.assign(n, SplitTag::Val);
    for (std::size_t i = 0; i < n_train; ++i)
        ds.split[perm[i]] = SplitTag::Train;
    return ds;
}

// Contacts are drawn in order from `seed`; frames are rendered (optionally in parallel)
// into per-index slots so the result does not depend on `jobs`.
inline Dataset generate_dataset(const FingerDesign& design, const CameraConfig& camera, const ContactRanges& ranges,
                                std::size_t n, std::uint64_t seed, unsigned jobs = 1)
{
    design.validate();
    camera.validate();
    ranges.validate(design);
    design.validate_depth_budget(ranges.depth_max_mm);

    Dataset ds;
    ds.ranges = ranges;
    ds.design_hash = design_hash(design, camera);
    ds.resolution = camera.resolution_px;
    ds.seed = seed;
    const auto targets = sample_contacts(ranges, n, seed);
    ds.samples.resize(n);
    parallel_for(n, jobs, [&](std::size_t i) {
        ds.samples[i] = synth_sample(design, camera, targets[i], 0, &ranges);
        ds.samples[i].seed = seed;
        ds.samples[i].index = i;
        ds.samples[i].frame.provenance.seed = seed;
    });
    ds.split.assign(n, SplitTag::Unassigned);
    return ds;
}

inline constexpr char kDatasetMagic[4] = {'T', 'F', 'R', 'D'};
inline constexpr std::uint16_t kDatasetVersion = 1;

inline std::vector<std::uint8_t> serialize_dataset(const Dataset& ds)
{
    require(ds.split.size() == ds.samples.size(), "split assignment does not cover the dataset");
    require(ds.resolution > 0 && ds.resolution <= 0xFFFF, "dataset resolution out of range");
    io::ByteWriter w;
    w.put_bytes({reinterpret_cast<const std::uint8_t*>(kDatasetMagic), 4});
    w.put(kDatasetVersion);
    w.put_bytes(ds.design_hash);
    w.put(static_cast<std::uint16_t>(ds.resolution));
    w.put(static_cast<std::uint32_t>(ds.size()));
    w.put(ds.ranges.depth_min_mm);
    w.put(ds.ranges.depth_max_mm);
    w.put(ds.ranges.location_min_mm);
    w.put(ds.ranges.location_max_mm);
    w.put(ds.seed);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Sample& s = ds.samples[i];
        require(s.frame.resolution() == ds.resolution, "sample resolution differs from dataset resolution");
        w.put_bytes(s.frame.packed());
        w.put(s.depth_mm);
        w.put(s.location_from_tip_mm);
        w.put(s.indenter_id);
        w.put(static_cast<std::uint8_t>(ds.split[i]));
    }
    return w.bytes();
}

inline Dataset deserialize_dataset(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4 || !std::equal(bytes.begin(), bytes.begin() + 4, kDatasetMagic))
        throw Error(ErrorKind::NotADataset, "not a dataset (bad magic)");
    io::ByteReader r(bytes.subspan(4));
    const auto version = r.get<std::uint16_t>();
    if (version != kDatasetVersion)
        throw Error(ErrorKind::VersionMismatch, "unsupported dataset version " + std::to_string(version) +
                                                    " (expected " + std::to_string(kDatasetVersion) + ")");
    Dataset ds;
    auto hash = r.get_bytes(32);
    std::copy(hash.begin(), hash.end(), ds.design_hash.begin());
    ds.resolution = r.get<std::uint16_t>();
    const auto n = r.get<std::uint32_t>();
    ds.ranges.depth_min_mm = r.get<double>();
    ds.ranges.depth_max_mm = r.get<double>();
    ds.ranges.location_min_mm = r.get<double>();
    ds.ranges.location_max_mm = r.get<double>();
    ds.seed = r.get<std::uint64_t>();
    if (ds.resolution == 0)
        throw Error(ErrorKind::Corrupt, "dataset resolution is zero");

    const std::size_t frame_bytes = MarkerFrame::packed_size(ds.resolution);
    const std::size_t record = frame_bytes + 2 * sizeof(double) + 2;
    if (r.remaining() < static_cast<std::size_t>(n) * record)
        throw Error(ErrorKind::Truncated, "dataset truncated: header declares " + std::to_string(n) +
                                              " samples but the payload holds " +
                                              std::to_string(r.remaining() / record));
    if (r.remaining() > static_cast<std::size_t>(n) * record)
        throw Error(ErrorKind::Corrupt, "dataset has trailing bytes beyond the declared " + std::to_string(n) +
                                            " samples");

    ds.samples.resize(n);
    ds.split.resize(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        auto px = r.get_bytes(frame_bytes);
        Sample& s = ds.samples[i];
        s.frame = MarkerFrame(ds.resolution, {px.begin(), px.end()});
        s.depth_mm = r.get<double>();
        s.location_from_tip_mm = r.get<double>();
        s.indenter_id = r.get<std::uint8_t>();
        const auto tag = r.get<std::uint8_t>();
        if (tag > static_cast<std::uint8_t>(SplitTag::Unassigned))
            throw Error(ErrorKind::Corrupt, "invalid split tag in sample " + std::to_string(i));
        ds.split[i] = static_cast<SplitTag>(tag);
        s.seed = ds.seed;
        s.index = i;
        s.frame.provenance.design_hash = ds.design_hash;
        s.frame.provenance.depth_mm = s.depth_mm;
        s.frame.provenance.location_from_tip_mm = s.location_from_tip_mm;
        s.frame.provenance.seed = ds.seed;
    }
    return ds;
}

inline void write_dataset(const Dataset& ds, const std::string& path)
{
    io::write_file(path, serialize_dataset(ds));
}

inline Dataset read_dataset(const std::string& path) { return deserialize_dataset(io::read_file(path)); }

inline Digest dataset_hash(const Dataset& ds)
{
    const auto bytes = serialize_dataset(ds);
    return Sha256{}.update(bytes).finish();
}

inline Json sidecar_json(const Dataset& ds, const FingerDesign& design, const CameraConfig& camera)
{
    return {{"format", "TFRD"},
            {"version", kDatasetVersion},
            {"finger", to_json(design)},
            {"camera", to_json(camera)},
            {"ranges", to_json(ds.ranges)},
            {"seed", ds.seed},
            {"n", ds.size()},
            {"n_train", ds.indices(SplitTag::Train).size()},
            {"n_val", ds.indices(SplitTag::Val).size()},
            {"resolution", ds.resolution},
            {"design_hash", to_hex(ds.design_hash)}};
}

} // namespace finray::datagen
