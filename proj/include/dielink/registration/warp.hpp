#pragma once

#include "dielink/imaging/gray_image.hpp"
#include "dielink/registration/transform.hpp"

namespace dielink::registration {

struct WarpedImage {
    imaging::GrayImage image;
    imaging::Mask valid;  ///< 0 where the sample fell outside the source
};

/// Resample `src` into an out_width x out_height frame where `t` maps source
/// coordinates to output coordinates. Bilinear; out-of-bounds samples are 0
/// and marked invalid.
WarpedImage warp(const imaging::GrayImage& src, const SimilarityTransform& t, int out_width, int out_height);

/// Same frame size as the source.
WarpedImage warp(const imaging::GrayImage& src, const SimilarityTransform& t);
WarpedImage warp(const imaging::NormalizedImage& src, const SimilarityTransform& t);

}  // namespace dielink::registration
