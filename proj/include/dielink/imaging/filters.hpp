#pragma once

#include <vector>

#include "dielink/imaging/gray_image.hpp"

namespace dielink::imaging {

/// Normalized 1D Gaussian taps of length 2*radius+1.
std::vector<double> gaussian_kernel(double sigma, int radius);

/// Separable Gaussian blur with clamp-to-edge borders. radius defaults to ceil(3*sigma).
GrayImage gaussian_blur(const GrayImage& img, double sigma, int radius = -1);

/// Box-filter (area-average) resample to the given size. Each output pixel is
/// the exact area-weighted mean of the source pixels its footprint covers.
GrayImage resample_area(const GrayImage& img, int out_width, int out_height);

/// Bilinear sample at a subpixel position; coordinates are clamped to the raster.
float sample_bilinear(const GrayImage& img, double x, double y) noexcept;

}  // namespace dielink::imaging
