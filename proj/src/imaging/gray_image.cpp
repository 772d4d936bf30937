#include "dielink/imaging/gray_image.hpp"

#include <algorithm>

namespace dielink::imaging {

void clamp_unit(GrayImage& img) {
    for (float& v : img.pixels()) v = std::clamp(v, 0.0f, 1.0f);
}

}  // namespace dielink::imaging
