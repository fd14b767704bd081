#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace spatialkit::action {

inline constexpr int dims = 7;
inline constexpr int grid_steps = 100;  // 100 bins => 101 lattice points

/// Continuous 7-DoF action: delta position (m), delta rotation (rad),
/// gripper closure in [0, 1].
struct ActionVector {
    double dx = 0, dy = 0, dz = 0;
    double droll = 0, dpitch = 0, dyaw = 0;
    double gripper = 0;

    std::array<double, dims> as_array() const { return {dx, dy, dz, droll, dpitch, dyaw, gripper}; }
    static ActionVector from_array(const std::array<double, dims>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }
};

/// Quantized action: seven lattice values from {0.00, 0.01, ..., 1.00},
/// stored exactly as integer steps 0..100.
struct ActionGrid {
    std::array<int, dims> steps{};  // value = steps[i] / 100

    double value(int i) const { return steps[i] / 100.0; }

    /// Validates that each value sits on the 0.01 lattice (within 1e-9)
    /// and inside [0, 1]; throws ValidationError otherwise.
    static ActionGrid from_values(const std::array<double, dims>& values);

    bool operator==(const ActionGrid&) const = default;
};

/// Per-dimension physical [lo, hi] bounds for the six delta components.
/// The gripper needs none (already in [0, 1]).
struct CalibrationRanges {
    std::array<double, 6> lo{-0.05, -0.05, -0.05, -0.2, -0.2, -0.2};
    std::array<double, 6> hi{0.05, 0.05, 0.05, 0.2, 0.2, 0.2};

    void validate() const;

    static CalibrationRanges load_json(const std::filesystem::path& path);
    void save_json(const std::filesystem::path& path) const;
};

struct QuantizeResult {
    ActionGrid grid;
    bool clamped = false;  // some component fell outside its range
};

/// Affine map (v - lo) / (hi - lo) per dimension, clamped to [0, 1] and
/// rounded to the nearest 0.01 (half up). Gripper is rounded directly.
QuantizeResult quantize(const ActionVector& v, const CalibrationRanges& cal);

/// Inverse: lo + g * (hi - lo) per dimension; gripper = g.
ActionVector dequantize(const ActionGrid& g, const CalibrationRanges& cal);

/// Renders "<v1, v2, v3, v4, v5, v6, v7>" with two decimals, except the
/// exact endpoints 0 and 1 which render bare. This string is a model I/O
/// contract; it must stay bit-exact.
std::string format_action_text(const ActionGrid& g);

/// Extracts the single "<...>" group of 7 comma-separated decimals from
/// text (surrounding prose is fine) and snaps each value to the lattice.
/// Wrong arity, a non-numeric token, an off-lattice value, or zero/multiple
/// groups throw ParseError naming the offending position.
ActionGrid parse_action_text(const std::string& text);

}  // namespace spatialkit::action
