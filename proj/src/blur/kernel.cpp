#include "veilmod/blur/kernel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "veilmod/error.hpp"

namespace veilmod::blur {

Kernel1D build_gaussian_kernel(double sigma) {
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw Error(ErrorKind::invalid_parameter, fmt::format("sigma must be finite and >= 0, got {}", sigma));
    if (sigma == 0.0)
        return {0.0, 0, {1.0}};

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);

    Kernel1D k{sigma, radius, std::vector<double>(2 * radius + 1)};
    double sum = 0.0;
    for (int i = 0; i <= 2 * radius; ++i) {
        const double d = i - radius;
        k.weights[i] = std::exp(-d * d * inv_two_var);
        sum += k.weights[i];
    }
    for (double& w : k.weights)
        w /= sum;
    return k;
}

} // namespace veilmod::blur
