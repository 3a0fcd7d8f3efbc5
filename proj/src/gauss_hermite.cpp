#include "bsvie/gauss_hermite.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <memory>

#include "bsvie/error.hpp"

namespace bsvie {

GaussHermite::GaussHermite(std::size_t points) {
    if (points == 0) throw Error(ErrorKind::Quadrature, "Gauss-Hermite rule needs at least one node");
    // Physicists' weight exp(-x^2): a = 0, b = 1.
    std::unique_ptr<gsl_integration_fixed_workspace, decltype(&gsl_integration_fixed_free)> ws(
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, points, 0.0, 1.0, 0.0, 0.0),
        &gsl_integration_fixed_free);
    if (!ws) throw Error(ErrorKind::Quadrature, "GSL failed to build the Gauss-Hermite rule");
    const double* x = gsl_integration_fixed_nodes(ws.get());
    const double* w = gsl_integration_fixed_weights(ws.get());
    nodes_.resize(points);
    weights_.resize(points);
    const double scale = 1.0 / std::sqrt(M_PI);
    for (std::size_t k = 0; k < points; ++k) {
        nodes_[k] = std::sqrt(2.0) * x[k];
        weights_[k] = scale * w[k];
    }
}

}  // namespace bsvie
