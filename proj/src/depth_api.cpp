#include "spatialkit/depth_api.hpp"

#include <cctype>

namespace spatialkit::api {

namespace {

constexpr std::int64_t max_coordinate = 1000000000;  // literals past this are near-matches

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

struct Scanner {
    const std::string& text;
    std::size_t pos;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool accept(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    // Reads a plain digit run. Fails on no digits or on overflow past
    // max_coordinate (treated as a near-match by the caller).
    bool read_int(std::int64_t& out) {
        skip_ws();
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) return false;
        std::int64_t v = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            v = v * 10 + (text[pos] - '0');
            if (v > max_coordinate) return false;
            ++pos;
        }
        out = v;
        return true;
    }
};

// Tries to match one call with `Depth` starting at `start`. On success
// fills `call` and returns true with `next` one past the closing paren.
bool match_call(const std::string& text, std::size_t start, ToolCall& call, std::size_t& next) {
    Scanner s{text, start + 5};  // past "Depth"
    if (!s.accept('(')) return false;
    std::int64_t v[4];
    if (!s.read_int(v[0])) return false;
    if (!s.accept(',')) return false;
    if (!s.read_int(v[1])) return false;
    int arity = 2;
    if (s.accept(',')) {
        if (!s.read_int(v[2])) return false;
        if (!s.accept(',')) return false;
        if (!s.read_int(v[3])) return false;
        arity = 4;
    }
    if (!s.accept(')')) return false;

    call.begin = start;
    call.end = s.pos;
    if (arity == 2) {
        call.kind = ToolCall::Kind::point;
        call.x1 = static_cast<int>(v[0]);
        call.y1 = static_cast<int>(v[1]);
        call.x2 = call.y2 = 0;
    } else {
        if (v[0] > v[2] || v[1] > v[3]) return false;  // violates the region invariant
        call.kind = ToolCall::Kind::region;
        call.x1 = static_cast<int>(v[0]);
        call.y1 = static_cast<int>(v[1]);
        call.x2 = static_cast<int>(v[2]);
        call.y2 = static_cast<int>(v[3]);
    }
    next = s.pos;
    return true;
}

std::string call_prefix(const ToolCall& call) {
    std::string s = "Depth(" + std::to_string(call.x1) + "," + std::to_string(call.y1);
    if (call.kind == ToolCall::Kind::region)
        s += "," + std::to_string(call.x2) + "," + std::to_string(call.y2);
    s += ")=";
    return s;
}

}  // namespace

std::vector<ToolCall> parse_tool_calls(const std::string& text) {
    std::vector<ToolCall> calls;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t hit = text.find("Depth", pos);
        if (hit == std::string::npos) break;
        if (hit > 0 && is_ident_char(text[hit - 1])) {
            pos = hit + 5;
            continue;
        }
        ToolCall call;
        std::size_t next;
        if (match_call(text, hit, call, next)) {
            calls.push_back(call);
            pos = next;
        } else {
            pos = hit + 5;
        }
    }
    return calls;
}

std::string answer_call(const ToolCall& call, const DepthMap& map) {
    const std::string prefix = call_prefix(call);
    if (call.kind == ToolCall::Kind::point) {
        if (!map.in_bounds(call.x1, call.y1)) return prefix + "error:out_of_bounds";
        const std::uint32_t d = map.at(call.x1, call.y1);
        if (d == 0) return prefix + "error:no_depth";
        return prefix + std::to_string(d) + "mm";
    }
    if (!map.in_bounds(call.x1, call.y1) || !map.in_bounds(call.x2, call.y2))
        return prefix + "error:out_of_bounds";
    BoundingBox bbox{call.x1, call.y1, call.x2, call.y2};
    try {
        DepthDescriptor d = describe_object(map, ObjectMask::from_bbox(map.height, map.width, bbox));
        return prefix + "min " + std::to_string(d.min_mm) + "mm, max " + std::to_string(d.max_mm) +
               "mm, mean " + std::to_string(d.mean_mm) + "mm, center " +
               std::to_string(d.center_mm) + "mm";
    } catch (const NoValidDepthError&) {
        return prefix + "error:no_depth";
    }
}

DialogSession::DialogSession(std::shared_ptr<const DepthMap> map, int max_turns)
    : map_(std::move(map)), max_turns_(max_turns) {
    if (!map_) throw ValidationError("dialog session needs a depth map");
    if (max_turns_ < 0) throw ValidationError("max_turns must be non-negative");
}

StepResult DialogSession::step(const std::string& model_output) {
    if (closed_) throw SessionClosedError("session is already closed");

    const auto calls = parse_tool_calls(model_output);
    if (!calls.empty() && turns_ < max_turns_) {
        std::string response;
        for (std::size_t i = 0; i < calls.size(); ++i) {
            if (i > 0) response += "\n";
            response += answer_call(calls[i], *map_);
        }
        turns_ += 1;
        transcript_.push_back({model_output, response});
        return {StepResult::Kind::tool_response, response};
    }

    closed_ = true;
    transcript_.push_back({model_output, ""});
    return {StepResult::Kind::final, model_output};
}

}  // namespace spatialkit::api
