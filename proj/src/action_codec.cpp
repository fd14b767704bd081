#include "spatialkit/action_codec.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "spatialkit/errors.hpp"

namespace spatialkit::action {

namespace {

constexpr double lattice_tolerance = 1e-9;

const char* dim_names[6] = {"dx", "dy", "dz", "droll", "dpitch", "dyaw"};

int snap_to_lattice(double v, std::size_t position, int token_index) {
    const long long k = std::llround(v * grid_steps);
    if (k < 0 || k > grid_steps || std::fabs(v - static_cast<double>(k) / grid_steps) > lattice_tolerance)
        throw ParseError("value " + std::to_string(v) + " at token " + std::to_string(token_index) +
                         " is not on the 0.01 lattice in [0, 1]", position);
    return static_cast<int>(k);
}

// Round half up onto the lattice after clamping into [0, 1].
int quantize_unit(double t, bool& clamped) {
    if (t < 0.0) {
        t = 0.0;
        clamped = true;
    } else if (t > 1.0) {
        t = 1.0;
        clamped = true;
    }
    int k = static_cast<int>(std::floor(t * grid_steps + 0.5));
    if (k > grid_steps) k = grid_steps;
    return k;
}

}  // namespace

ActionGrid ActionGrid::from_values(const std::array<double, dims>& values) {
    ActionGrid g;
    for (int i = 0; i < dims; ++i) {
        const double v = values[i];
        const long long k = std::llround(v * grid_steps);
        if (k < 0 || k > grid_steps ||
            std::fabs(v - static_cast<double>(k) / grid_steps) > lattice_tolerance)
            throw ValidationError("grid value " + std::to_string(v) + " (dimension " +
                                  std::to_string(i) + ") is not on the 0.01 lattice");
        g.steps[i] = static_cast<int>(k);
    }
    return g;
}

void CalibrationRanges::validate() const {
    for (int i = 0; i < 6; ++i)
        if (!(lo[i] < hi[i]))
            throw ValidationError(std::string("calibration range for ") + dim_names[i] +
                                  " must have lo < hi");
}

CalibrationRanges CalibrationRanges::load_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path.string());
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    CalibrationRanges cal;
    for (int i = 0; i < 6; ++i) {
        if (!j.contains(dim_names[i]))
            throw ValidationError(path.string() + ": missing range for " +
                                  std::string(dim_names[i]));
        const auto& pair = j.at(dim_names[i]);
        if (!pair.is_array() || pair.size() != 2)
            throw ValidationError(path.string() + ": range for " + std::string(dim_names[i]) +
                                  " must be [lo, hi]");
        cal.lo[i] = pair[0].get<double>();
        cal.hi[i] = pair[1].get<double>();
    }
    cal.validate();
    return cal;
}

void CalibrationRanges::save_json(const std::filesystem::path& path) const {
    validate();
    nlohmann::ordered_json j;
    for (int i = 0; i < 6; ++i) j[dim_names[i]] = {lo[i], hi[i]};
    std::ofstream f(path);
    if (!f) throw IoError("cannot open " + path.string() + " for writing");
    f << j.dump(2) << "\n";
}

QuantizeResult quantize(const ActionVector& v, const CalibrationRanges& cal) {
    cal.validate();
    QuantizeResult out;
    const auto values = v.as_array();
    for (int i = 0; i < 6; ++i) {
        const double t = (values[i] - cal.lo[i]) / (cal.hi[i] - cal.lo[i]);
        out.grid.steps[i] = quantize_unit(t, out.clamped);
    }
    out.grid.steps[6] = quantize_unit(values[6], out.clamped);
    return out;
}

ActionVector dequantize(const ActionGrid& g, const CalibrationRanges& cal) {
    cal.validate();
    std::array<double, dims> values{};
    for (int i = 0; i < dims; ++i) {
        const int k = g.steps[i];
        if (k < 0 || k > grid_steps)
            throw ValidationError("grid step " + std::to_string(k) + " (dimension " +
                                  std::to_string(i) + ") is outside the lattice");
        const double t = static_cast<double>(k) / grid_steps;
        values[i] = i < 6 ? cal.lo[i] + t * (cal.hi[i] - cal.lo[i]) : t;
    }
    return ActionVector::from_array(values);
}

std::string format_action_text(const ActionGrid& g) {
    std::string out = "<";
    for (int i = 0; i < dims; ++i) {
        const int k = g.steps[i];
        if (k < 0 || k > grid_steps)
            throw ValidationError("grid step " + std::to_string(k) + " is outside the lattice");
        if (i > 0) out += ", ";
        if (k == 0) {
            out += "0";
        } else if (k == grid_steps) {
            out += "1";
        } else {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "0.%02d", k);
            out += buf;
        }
    }
    out += ">";
    return out;
}

ActionGrid parse_action_text(const std::string& text) {
    const std::size_t open = text.find('<');
    if (open == std::string::npos)
        throw ParseError("no '<...>' action group found", 0);
    const std::size_t close = text.find('>', open + 1);
    if (close == std::string::npos)
        throw ParseError("action group is not terminated by '>'", open);
    if (text.find('<', close + 1) != std::string::npos)
        throw ParseError("more than one '<...>' group in text", text.find('<', close + 1));

    ActionGrid g;
    int token_index = 0;
    std::size_t pos = open + 1;
    while (true) {
        std::size_t comma = text.find(',', pos);
        std::size_t end = (comma == std::string::npos || comma > close) ? close : comma;

        std::size_t begin = pos;
        while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
        std::size_t last = end;
        while (last > begin && std::isspace(static_cast<unsigned char>(text[last - 1]))) --last;

        if (token_index >= dims)
            throw ParseError("expected 7 values in action group, found more", begin);
        if (begin == last)
            throw ParseError("empty value at token " + std::to_string(token_index), begin);

        const std::string token = text.substr(begin, last - begin);
        const char first = token[0];
        if (!(std::isdigit(static_cast<unsigned char>(first)) || first == '.'))
            throw ParseError("non-numeric token '" + token + "' at token " +
                             std::to_string(token_index), begin);
        char* parse_end = nullptr;
        const double v = std::strtod(token.c_str(), &parse_end);
        if (parse_end != token.c_str() + token.size())
            throw ParseError("non-numeric token '" + token + "' at token " +
                             std::to_string(token_index), begin);

        g.steps[token_index] = snap_to_lattice(v, begin, token_index);
        ++token_index;

        if (end == close) break;
        pos = end + 1;
    }
    if (token_index != dims)
        throw ParseError("expected 7 values in action group, got " + std::to_string(token_index),
                         open);
    return g;
}

}  // namespace spatialkit::action
