#pragma once

#include <vector>

namespace veilmod::blur {

// Sampled, normalized 1-D Gaussian. weights.size() == 2 * radius + 1.
struct Kernel1D {
    double sigma = 0.0;
    int radius = 0;
    std::vector<double> weights;
};

// radius = ceil(3 * sigma); sigma == 0 yields the identity kernel [1].
Kernel1D build_gaussian_kernel(double sigma);

} // namespace veilmod::blur
