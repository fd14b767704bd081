#include "spatialkit/prompts.hpp"

#include <map>

#include "spatialkit/errors.hpp"

namespace spatialkit::prompts {

const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = {"depthmap_understanding",
                                                   "spatial_understanding", "robot_scene"};
    return names;
}

const std::string& template_for(const std::string& task) {
    static const std::map<std::string, std::string> templates = {
        {"depthmap_understanding", depthmap_understanding},
        {"spatial_understanding", spatial_understanding},
        {"robot_scene", robot_scene},
    };
    auto it = templates.find(task);
    if (it == templates.end()) throw ValidationError("unknown prompt task '" + task + "'");
    return it->second;
}

}  // namespace spatialkit::prompts
