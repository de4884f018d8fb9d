#pragma once

#include "windvr/data.hpp"
#include "windvr/window.hpp"

namespace windvr::metrics {

// 10*log10(1/MSE) over the whole clip; identical inputs capped at 100 dB.
double psnr(const data::Clip& a, const data::Clip& b);

// Mean SSIM over frames and channels, Gaussian window (default 11 taps,
// sigma 1.5), standard constants k1=0.01, k2=0.03, data range 1.
double ssim(const data::Clip& a, const data::Clip& b, std::size_t window = 11,
            double k1 = 0.01, double k2 = 0.03);

// Boundary-to-interior gradient ratio for one frame of a clip against the
// spatial seams of a window layout; 1.0 means no boundary signature. Temporal
// boundaries are ignored. Guards: single-window layout or a constant frame
// give 1.0 exactly.
double boundary_artifact_score_frame(const data::Clip& c, std::size_t frame,
                                     const win::WindowLayout& layout);

// Average of the per-frame score over the clip.
double boundary_artifact_score(const data::Clip& c, const win::WindowLayout& layout);

struct MetricReport {
    double psnr_db = 0.0;
    double ssim = 0.0;
    double boundary_artifact = 1.0;
    double runtime_seconds = 0.0;
};

} // namespace windvr::metrics
