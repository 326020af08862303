#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcn/tensor.hpp"

namespace vcn {

// 8-bit image buffer, c = 1 (gray) or 3 (RGB), row-major.
struct Image8 {
    std::int64_t h = 0, w = 0, c = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(std::int64_t y, std::int64_t x, std::int64_t ch) {
        return pixels[static_cast<std::size_t>((y * w + x) * c + ch)];
    }
    std::uint8_t at(std::int64_t y, std::int64_t x, std::int64_t ch) const {
        return pixels[static_cast<std::size_t>((y * w + x) * c + ch)];
    }
};

Image8 read_png(const std::string& path);
void write_png(const std::string& path, const Image8& img);

// 8-bit <-> [-1, 1] mapping used everywhere internally.
template <class T>
Tensor<T> image_to_tensor(const Image8& img) {
    Tensor<T> t({img.h, img.w, img.c});
    for (std::int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<T>(img.pixels[static_cast<std::size_t>(i)]) / T(255) * T(2) - T(1);
    return t;
}

template <class T>
Image8 tensor_to_image(const Tensor<T>& t) {
    Image8 img;
    img.h = t.dims[0];
    img.w = t.dims[1];
    img.c = t.dims[2];
    img.pixels.resize(static_cast<std::size_t>(t.numel()));
    for (std::int64_t i = 0; i < t.numel(); ++i) {
        double v = (static_cast<double>(t[i]) + 1.0) / 2.0 * 255.0;
        v = v < 0 ? 0 : (v > 255 ? 255 : v);
        img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v + 0.5);
    }
    return img;
}

// Masks live in [0, 1]; 255 = damaged.
template <class T>
Tensor<T> mask_image_to_tensor(const Image8& img) {
    Tensor<T> t({img.h, img.w, std::int64_t(1)});
    for (std::int64_t y = 0; y < img.h; ++y)
        for (std::int64_t x = 0; x < img.w; ++x)
            t.at(y, x, 0) = static_cast<T>(img.at(y, x, 0)) / T(255);
    return t;
}

template <class T>
Image8 mask_tensor_to_image(const Tensor<T>& t) {
    Image8 img;
    img.h = t.dims[0];
    img.w = t.dims[1];
    img.c = 1;
    img.pixels.resize(static_cast<std::size_t>(img.h * img.w));
    for (std::int64_t i = 0; i < img.h * img.w; ++i) {
        double v = static_cast<double>(t[i]) * 255.0;
        v = v < 0 ? 0 : (v > 255 ? 255 : v);
        img.pixels[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v + 0.5);
    }
    return img;
}

} // namespace vcn
