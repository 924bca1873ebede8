#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fluxct/core/image.hpp"

namespace fluxct {

// Dense CHW activation buffer.
template <typename T>
struct Tensor {
    int channels = 0, height = 0, width = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int c, int h, int w)
        : channels(c), height(h), width(w),
          data(std::size_t(c) * std::size_t(h) * std::size_t(w), T(0)) {
        if (c <= 0 || h <= 0 || w <= 0) throw std::invalid_argument("Tensor: non-positive dims");
    }

    std::size_t plane() const { return std::size_t(height) * std::size_t(width); }
    std::size_t size() const { return data.size(); }
    T* channel(int c) { return data.data() + std::size_t(c) * plane(); }
    const T* channel(int c) const { return data.data() + std::size_t(c) * plane(); }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

template <typename T>
Tensor<T> tensor_from_image(const Image& img) {
    Tensor<T> t(1, img.height, img.width);
    for (std::size_t i = 0; i < t.size(); ++i) t.data[i] = T(img.data[i]);
    return t;
}

template <typename T>
Image image_from_tensor(const Tensor<T>& t) {
    if (t.channels != 1) throw std::invalid_argument("image_from_tensor: need 1 channel");
    Image img(t.width, t.height);
    for (std::size_t i = 0; i < t.size(); ++i) img.data[i] = float(t.data[i]);
    return img;
}

} // namespace fluxct
