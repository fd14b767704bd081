#pragma once

#include <string>
#include <vector>

namespace spatialkit::prompts {

// Conversation-generation prompt templates emitted into offline job
// files. These are model I/O contracts; the texts must stay byte-exact,
// quirks included.

inline constexpr const char* depthmap_understanding =
    "Design a conversion between you and a human talking about the depth map. The human asks "
    "you to describe the depth map. You should focus on depth value predictions. The colors "
    "just represent depth values. Do not directly mention colors on the image in your "
    "response, instead, mention the depth distribution they stand for. Looking at the depth "
    "map, you should also infer what may be in the image. If something really exists in the "
    "rgb image, and can be inferred from the depth map, you can mention they in your "
    "response. If possible, pay attention to spatial relationships. When referring to spatial "
    "relationships, such as left and right, you should use the real-world left and right, "
    "rather than those in the image coordinate system.";

inline constexpr const char* spatial_understanding =
    "Design a conversation, consisting of no more than 3 Question-Answer pairs, between you "
    "and a person asking about this image. The content within the conversation should be "
    "logically connected. You should think of what are spatial relationships of objects in "
    "the image. Then generate the conversation according regarding the spatial relationships. "
    "Spatial relationships can be about, but not limited to these categories: positional "
    "(left/right, below/above, behind/front), distance (further/closer to the camera, "
    "further/closer to something), size(big/small, tall/short, wide/thin), reach (has A "
    "touched/reached B physically). When describing spatial relationships, always use the "
    "real-world orientation as if you are standing in the real scene. e.g. when using right "
    "side of object, it should talk about what is on the right side of object in the real "
    "world, not on the right side of image'. Only describe the things that you are sure "
    "about.";

inline constexpr const char* robot_scene =
    "Design a conversation, consisting of no more than 3 Question-Answer pairs, between you "
    "and a person asking about this image. The content within the conversation should be "
    "logically connected. You should first think of robot task: what may the robot want to "
    "do with the objects. And then generate the conversation according to robot task. The "
    "conversations can include what robot are doing, how should the robot finish robot task, "
    "object count, object position, positional relationships, object appearance, etc. Only "
    "describe the things that you are sure about. Please note that you are talking to a "
    "person about the image and robot. You are not the robot, and you are not talking to the "
    "robot.";

/// Known task names, in emission order.
const std::vector<std::string>& task_names();

/// Template text for a task name; throws ValidationError on unknown task.
const std::string& template_for(const std::string& task);

}  // namespace spatialkit::prompts
