#include "windvr/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace windvr::metrics {

namespace {

void check_same_shape(const data::Clip& a, const data::Clip& b, const char* op) {
    if (a.frames != b.frames || a.height != b.height || a.width != b.width ||
        a.channels != b.channels)
        throw std::runtime_error(std::string(op) + ": clip shape mismatch");
}

} // namespace

double psnr(const data::Clip& a, const data::Clip& b) {
    check_same_shape(a, b, "psnr");
    double mse = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double d = a.values[i] - b.values[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.values.size());
    if (mse <= 0.0) return 100.0;
    const double v = 10.0 * std::log10(1.0 / mse);
    return v > 100.0 ? 100.0 : v;
}

double ssim(const data::Clip& a, const data::Clip& b, std::size_t window, double k1, double k2) {
    check_same_shape(a, b, "ssim");
    if (a.height < window || a.width < window)
        throw std::runtime_error("ssim: clip smaller than window");
    const double sigma = 1.5;
    std::vector<double> kern(window);
    const double half = (static_cast<double>(window) - 1.0) / 2.0;
    double ksum = 0.0;
    for (std::size_t i = 0; i < window; ++i) {
        const double d = static_cast<double>(i) - half;
        kern[i] = std::exp(-0.5 * d * d / (sigma * sigma));
        ksum += kern[i];
    }
    for (auto& k : kern) k /= ksum;

    const double c1 = k1 * k1;
    const double c2 = k2 * k2;
    double total = 0.0;
    std::size_t count = 0;

    for (std::size_t f = 0; f < a.frames; ++f)
        for (std::size_t ch = 0; ch < a.channels; ++ch)
            // valid positions only: the window fully inside the frame
            for (std::size_t y = 0; y + window <= a.height; ++y)
                for (std::size_t x = 0; x + window <= a.width; ++x) {
                    double mu_a = 0.0, mu_b = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
                    for (std::size_t dy = 0; dy < window; ++dy)
                        for (std::size_t dx = 0; dx < window; ++dx) {
                            const double wgt = kern[dy] * kern[dx];
                            const double va = a.at(f, y + dy, x + dx, ch);
                            const double vb = b.at(f, y + dy, x + dx, ch);
                            mu_a += wgt * va;
                            mu_b += wgt * vb;
                            saa += wgt * va * va;
                            sbb += wgt * vb * vb;
                            sab += wgt * va * vb;
                        }
                    const double var_a = saa - mu_a * mu_a;
                    const double var_b = sbb - mu_b * mu_b;
                    const double cov = sab - mu_a * mu_b;
                    const double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
                    const double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
                    total += num / den;
                    ++count;
                }
    return total / static_cast<double>(count);
}

double boundary_artifact_score_frame(const data::Clip& c, std::size_t frame,
                                     const win::WindowLayout& layout) {
    if (layout.grid.d_h != c.height || layout.grid.d_w != c.width)
        throw std::runtime_error("boundary_artifact_score: layout grid does not match frame size");

    // Spatial seam positions: window starts other than 0.
    std::vector<bool> col_seam(c.width, false), row_seam(c.height, false);
    for (const auto& b : layout.windows) {
        if (b.w0 > 0) col_seam[b.w0] = true;
        if (b.h0 > 0) row_seam[b.h0] = true;
    }

    double bsum = 0.0, isum = 0.0;
    std::size_t bcount = 0, icount = 0;
    auto lum = [&](std::size_t y, std::size_t x) {
        double v = 0.0;
        for (std::size_t ch = 0; ch < c.channels; ++ch) v += c.at(frame, y, x, ch);
        return v / static_cast<double>(c.channels);
    };
    for (std::size_t x = 1; x < c.width; ++x) {
        double d = 0.0;
        for (std::size_t y = 0; y < c.height; ++y) d += std::fabs(lum(y, x) - lum(y, x - 1));
        if (col_seam[x]) {
            bsum += d;
            bcount += c.height;
        } else {
            isum += d;
            icount += c.height;
        }
    }
    for (std::size_t y = 1; y < c.height; ++y) {
        double d = 0.0;
        for (std::size_t x = 0; x < c.width; ++x) d += std::fabs(lum(y, x) - lum(y - 1, x));
        if (row_seam[y]) {
            bsum += d;
            bcount += c.width;
        } else {
            isum += d;
            icount += c.width;
        }
    }

    if (bcount == 0) return 1.0; // single-window layout: no seams by definition
    const double bmean = bsum / static_cast<double>(bcount);
    const double imean = icount > 0 ? isum / static_cast<double>(icount) : 0.0;
    if (imean == 0.0) return bmean == 0.0 ? 1.0 : 1e9;
    return bmean / imean;
}

double boundary_artifact_score(const data::Clip& c, const win::WindowLayout& layout) {
    double total = 0.0;
    for (std::size_t f = 0; f < c.frames; ++f)
        total += boundary_artifact_score_frame(c, f, layout);
    return total / static_cast<double>(c.frames);
}

} // namespace windvr::metrics
