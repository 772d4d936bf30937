#pragma once

#include <span>

namespace dielink::registration {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// p' = s * R(theta) * p + t, stored as (a, b) = s * (cos theta, sin theta).
class SimilarityTransform {
public:
    SimilarityTransform() = default;
    /// Throws std::invalid_argument when scale <= 0 or not finite.
    SimilarityTransform(double rotation, double scale, double tx, double ty);

    static SimilarityTransform from_linear(double a, double b, double tx, double ty);

    double rotation() const noexcept;
    double scale() const noexcept;
    double tx() const noexcept { return tx_; }
    double ty() const noexcept { return ty_; }
    double a() const noexcept { return a_; }
    double b() const noexcept { return b_; }

    Point2 apply(Point2 p) const noexcept {
        return {a_ * p.x - b_ * p.y + tx_, b_ * p.x + a_ * p.y + ty_};
    }

    SimilarityTransform inverse() const;

    /// Apply *this first, then `next`.
    SimilarityTransform then(const SimilarityTransform& next) const noexcept;

    bool is_identity() const noexcept { return a_ == 1.0 && b_ == 0.0 && tx_ == 0.0 && ty_ == 0.0; }

private:
    double a_ = 1.0;
    double b_ = 0.0;
    double tx_ = 0.0;
    double ty_ = 0.0;
};

/// Least-squares similarity mapping src[i] onto dst[i] (closed form).
/// Throws DegenerateGeometry when fewer than 2 points or all src points coincide.
SimilarityTransform fit_similarity(std::span<const Point2> src, std::span<const Point2> dst);

}  // namespace dielink::registration
