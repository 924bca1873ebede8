#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace fluxct {

// 2-D parallel-beam acquisition geometry. Angles are radians in [0, pi),
// strictly increasing; detector bins are centered on the rotation axis with
// uniform spacing in pixel units.
struct Geometry {
    int n_views = 0;
    std::vector<double> angles;
    int n_detectors = 0;
    double detector_spacing = 1.0;
    int image_size = 0;

    static Geometry parallel(int n_views, int n_detectors, int image_size,
                             double detector_spacing = 1.0) {
        Geometry g;
        g.n_views = n_views;
        g.n_detectors = n_detectors;
        g.image_size = image_size;
        g.detector_spacing = detector_spacing;
        g.angles.resize(std::size_t(std::max(n_views, 0)));
        for (int v = 0; v < n_views; ++v)
            g.angles[std::size_t(v)] = v * std::numbers::pi / n_views;
        g.validate();
        return g;
    }

    void validate() const {
        if (n_views < 1) throw std::invalid_argument("Geometry: n_views < 1");
        if (angles.size() != std::size_t(n_views))
            throw std::invalid_argument("Geometry: angle count mismatch");
        for (std::size_t i = 1; i < angles.size(); ++i)
            if (!(angles[i] > angles[i - 1]))
                throw std::invalid_argument("Geometry: angles not strictly increasing");
        if (image_size < 1) throw std::invalid_argument("Geometry: image_size < 1");
        if (!(detector_spacing > 0.0))
            throw std::invalid_argument("Geometry: detector_spacing <= 0");
        const double diagonal = image_size * std::numbers::sqrt2;
        if (n_detectors < static_cast<int>(std::ceil(diagonal / detector_spacing)))
            throw std::invalid_argument("Geometry: detector row too short for full coverage");
    }

    bool operator==(const Geometry&) const = default;
};

} // namespace fluxct
