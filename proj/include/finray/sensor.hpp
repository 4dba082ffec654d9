#pragma once

// Internal-camera model: marker-tipped pins under the crossbeam, viewed
// orthographically along the pin axis and binarized.

#include "finray/error.hpp"
#include "finray/mechanics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

namespace finray::sensor {

using mechanics::BeamState;
using mechanics::FingerDesign;

struct CameraConfig {
    int resolution_px = 128;
    double pixels_per_mm = 4.0;
    int marker_radius_px = 2;
    // Long row sits row_gap/2 above the optical axis in the image, base row below.
    double row_gap_mm = 4.0;
    double visibility_halfwidth_mm = 5.0;
    double reference_pin_length_mm = 5.5;

    void validate() const
    {
        require(resolution_px > 0 && resolution_px <= 4096, "camera resolution out of range");
        require(pixels_per_mm > 0, "pixels_per_mm must be positive");
        require(marker_radius_px >= 0, "marker_radius_px must be non-negative");
        require(row_gap_mm >= 0, "row_gap_mm must be non-negative");
        require(visibility_halfwidth_mm >= 0, "visibility_halfwidth_mm must be non-negative");
        require(reference_pin_length_mm > 0, "reference_pin_length_mm must be positive");
    }

    double axis_px() const { return 0.5 * resolution_px; }
};

enum class PinRow : std::uint8_t { Long, Base };

struct Pin {
    double attach_s_mm;
    PinRow row;
    double length_mm;
};

struct PinArray {
    std::vector<Pin> pins; // long row first, then base row
    std::size_t n_long = 0;
    std::size_t n_base = 0;
};

inline PinArray pin_layout(const FingerDesign& design)
{
    design.validate();
    const auto pts = mechanics::attachment_points(design);
    PinArray arr;
    for (double s : pts.long_row)
        arr.pins.push_back({s, PinRow::Long, design.long_pin_length_mm});
    for (double s : pts.base_row)
        arr.pins.push_back({s, PinRow::Base, design.base_pin_length_mm});
    arr.n_long = pts.long_row.size();
    arr.n_base = pts.base_row.size();
    return arr;
}

struct Marker {
    double u_px;
    double v_px;
    PinRow row;
    bool visible;
};

struct MarkerProjection {
    std::vector<Marker> markers;
};

// u = g (s + dx + p * slope(s)) + u0,  v = v_row + g (p / p_ref) w(s)
inline MarkerProjection project_markers(const FingerDesign& design, const BeamState& state, const CameraConfig& camera)
{
    const PinArray layout = pin_layout(design);
    require(!layout.pins.empty(), "pin layout is empty");
    require(state.s_mm.size() == layout.pins.size() + 2, "beam state was not sampled at this design's pins");

    const double g = camera.pixels_per_mm;
    const double u0 = camera.axis_px() - g * 0.5 * design.beam_length_mm;
    const double v_long = camera.axis_px() - 0.5 * g * camera.row_gap_mm;
    const double v_base = camera.axis_px() + 0.5 * g * camera.row_gap_mm;

    MarkerProjection proj;
    proj.markers.reserve(layout.pins.size());
    for (std::size_t i = 0; i < layout.pins.size(); ++i) {
        const Pin& pin = layout.pins[i];
        const double w = state.deflection_mm[i + 1];
        const double slope = state.slope_rad[i + 1];
        const double u = g * (pin.attach_s_mm + state.shift_mm + pin.length_mm * slope) + u0;
        const double v_row = pin.row == PinRow::Long ? v_long : v_base;
        const double v = v_row + g * (pin.length_mm / camera.reference_pin_length_mm) * w;
        proj.markers.push_back({u, v, pin.row, true});
    }
    return proj;
}

// Base pins are hidden behind the long row except inside a window around the optical axis.
inline MarkerProjection apply_occlusion(const MarkerProjection& proj, const CameraConfig& camera)
{
    MarkerProjection out = proj;
    const double limit = camera.pixels_per_mm * camera.visibility_halfwidth_mm;
    for (Marker& m : out.markers) {
        if (m.row == PinRow::Base)
            m.visible = std::abs(m.u_px - camera.axis_px()) <= limit;
        else
            m.visible = true;
    }
    return out;
}

using DesignHash = std::array<std::uint8_t, 32>;

struct FrameProvenance {
    DesignHash design_hash{};
    double depth_mm = 0.0;
    double location_from_tip_mm = 0.0;
    std::uint64_t seed = 0;
};

// Square 1-bit image, row-major, 8 pixels per byte with the first pixel in the MSB.
class MarkerFrame {
public:
    MarkerFrame() = default;
    explicit MarkerFrame(int resolution)
        : resolution_(resolution), bits_((static_cast<std::size_t>(resolution) * resolution + 7) / 8, 0)
    {
    }
    MarkerFrame(int resolution, std::vector<std::uint8_t> packed) : resolution_(resolution), bits_(std::move(packed))
    {
        require(bits_.size() == packed_size(resolution), "packed frame has the wrong size");
    }

    static std::size_t packed_size(int resolution)
    {
        return (static_cast<std::size_t>(resolution) * resolution + 7) / 8;
    }

    int resolution() const { return resolution_; }
    const std::vector<std::uint8_t>& packed() const { return bits_; }

    bool get(int x, int y) const
    {
        const std::size_t i = index(x, y);
        return (bits_[i >> 3] >> (7 - (i & 7))) & 1u;
    }
    void set(int x, int y)
    {
        const std::size_t i = index(x, y);
        bits_[i >> 3] |= static_cast<std::uint8_t>(1u << (7 - (i & 7)));
    }

    std::size_t count() const
    {
        std::size_t n = 0;
        for (auto b : bits_)
            n += static_cast<std::size_t>(std::popcount(b));
        return n;
    }

    bool operator==(const MarkerFrame& o) const { return resolution_ == o.resolution_ && bits_ == o.bits_; }

    FrameProvenance provenance;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(resolution_) + static_cast<std::size_t>(x);
    }

    int resolution_ = 0;
    std::vector<std::uint8_t> bits_;
};

inline MarkerFrame render_frame(const MarkerProjection& proj, const CameraConfig& camera)
{
    const int res = camera.resolution_px;
    const int r = camera.marker_radius_px;
    MarkerFrame frame(res);
    for (const Marker& m : proj.markers) {
        if (!m.visible || !std::isfinite(m.u_px) || !std::isfinite(m.v_px))
            continue;
        // std::round rounds half away from zero.
        const double cu = std::round(m.u_px);
        const double cv = std::round(m.v_px);
        if (cu < -r || cv < -r || cu > res - 1 + r || cv > res - 1 + r)
            continue;
        const int cx = static_cast<int>(cu);
        const int cy = static_cast<int>(cv);
        for (int dy = -r; dy <= r; ++dy) {
            for (int dx = -r; dx <= r; ++dx) {
                if (dx * dx + dy * dy > r * r)
                    continue;
                const int x = cx + dx;
                const int y = cy + dy;
                if (x >= 0 && y >= 0 && x < res && y < res)
                    frame.set(x, y);
            }
        }
    }
    return frame;
}

inline MarkerFrame render_state(const FingerDesign& design, const BeamState& state, const CameraConfig& camera)
{
    return render_frame(apply_occlusion(project_markers(design, state, camera), camera), camera);
}

// Netpbm P4 bitmap: header then the packed rows (each row padded to a whole byte).
inline void write_netpbm(const MarkerFrame& frame, const std::string& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
    const int res = frame.resolution();
    os << "P4\n" << res << " " << res << "\n";
    const std::size_t row_bytes = (static_cast<std::size_t>(res) + 7) / 8;
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < res; ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (int x = 0; x < res; ++x)
            if (frame.get(x, y))
                row[static_cast<std::size_t>(x) >> 3] |= static_cast<std::uint8_t>(1u << (7 - (x & 7)));
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!os)
        throw Error(ErrorKind::Io, "failed writing " + path);
}

// Long-row summary statistics: horizontal spread and mean position of the markers.
inline double long_row_spread(const MarkerProjection& proj)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Marker& m : proj.markers)
        if (m.row == PinRow::Long) {
            lo = std::min(lo, m.u_px);
            hi = std::max(hi, m.u_px);
        }
    return hi - lo;
}

inline double long_row_mean_u(const MarkerProjection& proj)
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const Marker& m : proj.markers)
        if (m.row == PinRow::Long) {
            sum += m.u_px;
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

} // namespace finray::sensor
