#include "dielink/registration/warp.hpp"

#include <cmath>

#include "dielink/imaging/filters.hpp"

namespace dielink::registration {

using imaging::GrayImage;
using imaging::Mask;

namespace {

constexpr double kEdgeSlack = 1e-9;

inline void warp_row(const GrayImage& src, const SimilarityTransform& inv, int y, WarpedImage& out) {
    const double maxx = src.width() - 1 + kEdgeSlack;
    const double maxy = src.height() - 1 + kEdgeSlack;
    auto dst = out.image.row(y);
    auto valid = out.valid.row(y);
    for (int x = 0; x < out.image.width(); ++x) {
        const Point2 p = inv.apply({static_cast<double>(x), static_cast<double>(y)});
        if (p.x < -kEdgeSlack || p.y < -kEdgeSlack || p.x > maxx || p.y > maxy) {
            dst[x] = 0.0f;
            valid[x] = 0;
            continue;
        }
        dst[x] = imaging::sample_bilinear(src, p.x, p.y);
        valid[x] = 1;
    }
}

}  // namespace

WarpedImage warp(const GrayImage& src, const SimilarityTransform& t, int out_width, int out_height) {
    WarpedImage out{GrayImage(out_width, out_height), Mask(out_width, out_height, 0)};
    if (t.is_identity() && src.width() == out_width && src.height() == out_height) {
        out.image = src;
        out.valid = Mask(out_width, out_height, 1);
        return out;
    }
    const SimilarityTransform inv = t.inverse();
#pragma omp parallel for schedule(static)
    for (int y = 0; y < out_height; ++y) warp_row(src, inv, y, out);
    return out;
}

WarpedImage warp(const GrayImage& src, const SimilarityTransform& t) {
    return warp(src, t, src.width(), src.height());
}

WarpedImage warp(const imaging::NormalizedImage& src, const SimilarityTransform& t) {
    return warp(src.image, t);
}

}  // namespace dielink::registration
