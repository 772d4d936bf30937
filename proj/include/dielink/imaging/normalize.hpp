#pragma once

#include <optional>
#include <string>

#include "dielink/imaging/gray_image.hpp"

namespace dielink::imaging {

inline constexpr int kTargetExtent = 400;
/// Extents up to this bound already count as "about 400" and are left alone.
inline constexpr int kExtentToleranceHigh = 440;
inline constexpr int kExtentToleranceLow = 360;
/// Below this the coin is too small for reliable comparison.
inline constexpr int kDegenerateExtent = 32;

/// Otsu threshold over a 256-bin histogram of [0,1] values.
/// Returns nullopt when the image has a single intensity.
std::optional<double> otsu_threshold(const GrayImage& img);

/// Coin foreground: Otsu split, polarity chosen so the border is background,
/// largest 8-connected component, then a radius-3 morphological close.
/// Throws SegmentationFailure when nothing separates from the background.
Mask segment_coin(const GrayImage& img);

/// Bounding-box extent of the segmented coin. Throws SegmentationFailure.
EffectiveSize estimate_effective_size(const GrayImage& img);

/// Same, but falls back to the larger image dimension when segmentation fails.
EffectiveSize effective_size_or_fallback(const GrayImage& img);

/// Reduce the image so the coin extent becomes 400px. Never upscales.
/// Extents already within the tolerance band (<= 440) are returned unchanged,
/// which keeps the operation idempotent.
NormalizedImage normalize(const GrayImage& img, EffectiveSize eff, std::string source_name = {});

/// estimate (with fallback) + normalize.
NormalizedImage normalize_image(const GrayImage& img, std::string source_name = {});

}  // namespace dielink::imaging
