#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "spatialkit/depth_map.hpp"
#include "spatialkit/object_depth.hpp"

namespace spatialkit::api {

/// One Depth(...) call found in model text. Point form carries (x, y);
/// region form carries (x1, y1, x2, y2) with x1 <= x2 and y1 <= y2.
struct ToolCall {
    enum class Kind { point, region };
    Kind kind = Kind::point;
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    std::size_t begin = 0;  // byte span in the source text
    std::size_t end = 0;

    bool operator==(const ToolCall&) const = default;
};

/// Finds every non-overlapping match of `Depth( INT , INT )` or
/// `Depth( INT , INT , INT , INT )` in textual order. Whitespace is
/// allowed between tokens. Near-matches (wrong arity, non-digits,
/// a region with x1 > x2 or y1 > y2, or an absurdly long literal) are
/// skipped, never errors; `Depth` preceded by an identifier character
/// does not match. Total on arbitrary input.
std::vector<ToolCall> parse_tool_calls(const std::string& text);

/// Answers one call from the map. Response texts are training targets
/// and bit-exact:
///   point   -> "Depth(x,y)=<d>mm"
///   region  -> "Depth(x1,y1,x2,y2)=min <a>mm, max <b>mm, mean <c>mm, center <e>mm"
///   errors  -> "...=error:out_of_bounds" / "...=error:no_depth"
std::string answer_call(const ToolCall& call, const DepthMap& map);

/// Result of one dialog step.
struct StepResult {
    enum class Kind { tool_response, final };
    Kind kind = Kind::final;
    std::string text;
};

/// Bounded ask-answer loop over one depth map. A step whose model output
/// contains tool calls gets them answered (newline-joined) until
/// max_turns is reached; any other output is the final answer and closes
/// the session. Stepping a closed session throws SessionClosedError.
class DialogSession {
public:
    DialogSession(std::shared_ptr<const DepthMap> map, int max_turns = 4);

    StepResult step(const std::string& model_output);

    bool closed() const { return closed_; }
    int turns_used() const { return turns_; }
    int max_turns() const { return max_turns_; }

    struct Turn {
        std::string model_output;
        std::string api_response;  // empty for the final turn
    };
    const std::vector<Turn>& transcript() const { return transcript_; }

private:
    std::shared_ptr<const DepthMap> map_;
    int max_turns_;
    int turns_ = 0;
    bool closed_ = false;
    std::vector<Turn> transcript_;
};

}  // namespace spatialkit::api
