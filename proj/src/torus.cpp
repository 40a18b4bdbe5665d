#include "vortex/torus.hpp"

#include <stdexcept>
#include <string>

namespace vortex {

void require_wrapped(const std::vector<Vec2>& pts) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!is_wrapped(pts[i])) {
            throw std::invalid_argument("position " + std::to_string(i) +
                                        " is not wrapped to [-1/2,1/2)");
        }
    }
}

}  // namespace vortex
