#include "dielink/imaging/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "dielink/imaging/filters.hpp"

namespace dielink::imaging {

NormalizedImage normalize(const GrayImage& img, EffectiveSize eff, std::string source_name) {
    const int extent = std::clamp(eff.extent, 1, std::max(img.width(), img.height()));
    NormalizedImage out{img, 1.0, std::move(source_name), extent, extent < kDegenerateExtent};
    if (extent <= kExtentToleranceHigh) return out;

    const double scale = static_cast<double>(kTargetExtent) / extent;
    const int w = std::max(1, static_cast<int>(std::lround(img.width() * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(img.height() * scale)));
    out.image = resample_area(img, w, h);
    out.scale_applied = scale;
    out.effective_extent = kTargetExtent;
    return out;
}

NormalizedImage normalize_image(const GrayImage& img, std::string source_name) {
    return normalize(img, effective_size_or_fallback(img), std::move(source_name));
}

}  // namespace dielink::imaging
