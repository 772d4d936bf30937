#include "dielink/scoring/ssim.hpp"

#include <cmath>
#include <stdexcept>

#include "dielink/errors.hpp"

namespace dielink::scoring {

using imaging::GrayImage;
using imaging::Mask;

SsimWindow SsimWindow::gaussian(int size, double sigma) {
    if (size < 1 || sigma <= 0.0) throw std::invalid_argument("ssim window: bad gaussian parameters");
    std::vector<double> taps(size);
    const double center = (size - 1) / 2.0;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - center;
        taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return {taps, taps};
}

SsimWindow SsimWindow::uniform(int width, int height) {
    if (width < 1 || height < 1) throw std::invalid_argument("ssim window: bad size");
    return {std::vector<double>(width, 1.0 / width), std::vector<double>(height, 1.0 / height)};
}

double ssim_from_moments(double mu_x, double mu_y, double var_x, double var_y, double cov_xy,
                         const SsimParams& p) noexcept {
    const double c1 = p.c1();
    const double c2 = p.c2();
    const double num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov_xy + c2);
    const double den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2);
    return num / den;
}

namespace {

void check_inputs(const GrayImage& a, const GrayImage& b, const Mask& mask, const SsimParams& p) {
    if (!a.same_shape(b) || a.width() != mask.width() || a.height() != mask.height())
        throw std::invalid_argument("ssim: images and mask must have the same shape");
    if (p.window.width() < 1 || p.window.height() < 1)
        throw std::invalid_argument("ssim: empty window");
    if (p.window.width() > a.width() || p.window.height() > a.height())
        throw EmptyOverlap("ssim: window larger than the image");
}

// A window qualifies when count >= fraction * area; compare in integers when possible.
bool qualifies(double count, int area, double fraction) noexcept {
    return count >= fraction * area - 1e-9;
}

struct Moments {
    double w = 0, x = 0, y = 0, xx = 0, yy = 0, xy = 0, count = 0;
};

double window_ssim(const Moments& m, const SsimParams& p) noexcept {
    const double mx = m.x / m.w;
    const double my = m.y / m.w;
    const double vx = m.xx / m.w - mx * mx;
    const double vy = m.yy / m.w - my * my;
    const double cxy = m.xy / m.w - mx * my;
    return ssim_from_moments(mx, my, vx, vy, cxy, p);
}

}  // namespace

double ssim(const GrayImage& a, const GrayImage& b, const Mask& mask, const SsimParams& p) {
    check_inputs(a, b, mask, p);
    const int w = a.width();
    const int h = a.height();
    const int ww = p.window.width();
    const int wh = p.window.height();
    const int ow = w - ww + 1;
    const int oh = h - wh + 1;
    const auto& hx = p.window.horizontal;
    const auto& vy = p.window.vertical;

    // Horizontal pass: seven weighted row sums per window column.
    constexpr int kMaps = 7;
    std::vector<double> horiz(static_cast<std::size_t>(kMaps) * ow * h);
    auto H = [&](int map, int x, int y) -> double& {
        return horiz[(static_cast<std::size_t>(map) * h + y) * ow + x];
    };
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y) {
        auto ra = a.row(y);
        auto rb = b.row(y);
        auto rm = mask.row(y);
        for (int x = 0; x < ow; ++x) {
            double s[kMaps] = {0, 0, 0, 0, 0, 0, 0};
            for (int k = 0; k < ww; ++k) {
                if (!rm[x + k]) continue;
                const double wt = hx[k];
                const double xa = ra[x + k];
                const double xb = rb[x + k];
                s[0] += wt;
                s[1] += wt * xa;
                s[2] += wt * xb;
                s[3] += wt * (xa * xa);
                s[4] += wt * (xb * xb);
                s[5] += wt * (xa * xb);
                s[6] += 1.0;
            }
            for (int m = 0; m < kMaps; ++m) H(m, x, y) = s[m];
        }
    }

    // Vertical pass and per-window SSIM, accumulated per output row so the
    // final sum does not depend on the thread count.
    std::vector<double> row_sum(oh, 0.0);
    std::vector<long long> row_count(oh, 0);
#pragma omp parallel for schedule(static)
    for (int y = 0; y < oh; ++y) {
        double acc = 0.0;
        long long n = 0;
        for (int x = 0; x < ow; ++x) {
            Moments m;
            for (int k = 0; k < wh; ++k) {
                const double wt = vy[k];
                m.w += wt * H(0, x, y + k);
                m.x += wt * H(1, x, y + k);
                m.y += wt * H(2, x, y + k);
                m.xx += wt * H(3, x, y + k);
                m.yy += wt * H(4, x, y + k);
                m.xy += wt * H(5, x, y + k);
                m.count += H(6, x, y + k);
            }
            if (!qualifies(m.count, ww * wh, p.min_valid_fraction) || m.w <= 0.0) continue;
            acc += window_ssim(m, p);
            ++n;
        }
        row_sum[y] = acc;
        row_count[y] = n;
    }

    double total = 0.0;
    long long count = 0;
    for (int y = 0; y < oh; ++y) {
        total += row_sum[y];
        count += row_count[y];
    }
    if (count == 0) throw EmptyOverlap("ssim: no window has enough valid pixels");
    return total / static_cast<double>(count);
}

double ssim(const GrayImage& a, const GrayImage& b, const SsimParams& p) {
    return ssim(a, b, Mask(a.width(), a.height(), 1), p);
}

double ssim_reference(const GrayImage& a, const GrayImage& b, const Mask& mask, const SsimParams& p) {
    check_inputs(a, b, mask, p);
    const int ww = p.window.width();
    const int wh = p.window.height();
    double total = 0.0;
    long long count = 0;
    for (int y0 = 0; y0 + wh <= a.height(); ++y0) {
        for (int x0 = 0; x0 + ww <= a.width(); ++x0) {
            Moments m;
            for (int j = 0; j < wh; ++j) {
                for (int i = 0; i < ww; ++i) {
                    if (!mask.at(x0 + i, y0 + j)) continue;
                    const double wt = p.window.horizontal[i] * p.window.vertical[j];
                    const double xa = a.at(x0 + i, y0 + j);
                    const double xb = b.at(x0 + i, y0 + j);
                    m.w += wt;
                    m.x += wt * xa;
                    m.y += wt * xb;
                    m.xx += wt * xa * xa;
                    m.yy += wt * xb * xb;
                    m.xy += wt * xa * xb;
                    m.count += 1.0;
                }
            }
            if (!qualifies(m.count, ww * wh, p.min_valid_fraction) || m.w <= 0.0) continue;
            total += window_ssim(m, p);
            ++count;
        }
    }
    if (count == 0) throw EmptyOverlap("ssim: no window has enough valid pixels");
    return total / static_cast<double>(count);
}

}  // namespace dielink::scoring
