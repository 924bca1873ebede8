#include "fluxct/tomo/projector.hpp"

#include <stdexcept>

namespace fluxct {

Sinogram forward_project(const Image& img, const Geometry& g) {
    g.validate();
    if (img.width != g.image_size || img.height != g.image_size)
        throw std::invalid_argument("forward_project: image does not match geometry");
    Sinogram sino(g, SinogramStage::LineIntegral);
    forward_project_into(g, img.data.data(), sino.data.data());
    return sino;
}

Image backproject(const Sinogram& sino) {
    sino.geometry.validate();
    Image img(sino.geometry.image_size, sino.geometry.image_size);
    backproject_into(sino.geometry, sino.data.data(), img.data.data());
    return img;
}

} // namespace fluxct
