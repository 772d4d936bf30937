#include "dielink/registration/transform.hpp"

#include <cmath>
#include <stdexcept>

#include "dielink/errors.hpp"

namespace dielink::registration {

SimilarityTransform::SimilarityTransform(double rotation, double scale, double tx, double ty)
    : tx_(tx), ty_(ty) {
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(rotation))
        throw std::invalid_argument("similarity transform: scale must be positive and finite");
    if (rotation == 0.0) {
        a_ = scale;
        b_ = 0.0;
    } else {
        a_ = scale * std::cos(rotation);
        b_ = scale * std::sin(rotation);
    }
}

SimilarityTransform SimilarityTransform::from_linear(double a, double b, double tx, double ty) {
    if (!(a * a + b * b > 0.0)) throw std::invalid_argument("similarity transform: zero linear part");
    SimilarityTransform t;
    t.a_ = a;
    t.b_ = b;
    t.tx_ = tx;
    t.ty_ = ty;
    return t;
}

double SimilarityTransform::rotation() const noexcept { return std::atan2(b_, a_); }

double SimilarityTransform::scale() const noexcept { return std::hypot(a_, b_); }

SimilarityTransform SimilarityTransform::inverse() const {
    // (a + ib)^-1 = (a - ib) / (a^2 + b^2)
    const double n = a_ * a_ + b_ * b_;
    const double ia = a_ / n;
    const double ib = -b_ / n;
    return from_linear(ia, ib, -(ia * tx_ - ib * ty_), -(ib * tx_ + ia * ty_));
}

SimilarityTransform SimilarityTransform::then(const SimilarityTransform& next) const noexcept {
    SimilarityTransform t;
    t.a_ = next.a_ * a_ - next.b_ * b_;
    t.b_ = next.b_ * a_ + next.a_ * b_;
    t.tx_ = next.a_ * tx_ - next.b_ * ty_ + next.tx_;
    t.ty_ = next.b_ * tx_ + next.a_ * ty_ + next.ty_;
    return t;
}

SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst) {
    if (src.size() != dst.size()) throw std::invalid_argument("fit_similarity: size mismatch");
    if (src.size() < 2) throw DegenerateGeometry("fit_similarity: need at least 2 correspondences");

    const double n = static_cast<double>(src.size());
    Point2 cs;
    Point2 cd;
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs.x += src[i].x;
        cs.y += src[i].y;
        cd.x += dst[i].x;
        cd.y += dst[i].y;
    }
    cs = {cs.x / n, cs.y / n};
    cd = {cd.x / n, cd.y / n};

    double var = 0.0;
    double dot = 0.0;
    double cross = 0.0;
    for (std::size_t i = 0; i < src.size(); ++i) {
        const double sx = src[i].x - cs.x;
        const double sy = src[i].y - cs.y;
        const double dx = dst[i].x - cd.x;
        const double dy = dst[i].y - cd.y;
        var += sx * sx + sy * sy;
        dot += sx * dx + sy * dy;
        cross += sx * dy - sy * dx;
    }
    if (var <= 1e-12 * n) throw DegenerateGeometry("fit_similarity: source points coincide");
    const double a = dot / var;
    const double b = cross / var;
    if (a * a + b * b <= 1e-24) throw DegenerateGeometry("fit_similarity: target points coincide");
    return SimilarityTransform::from_linear(a, b, cd.x - (a * cs.x - b * cs.y), cd.y - (b * cs.x + a * cs.y));
}

}  // namespace dielink::registration
