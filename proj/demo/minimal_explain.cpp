// Explains one synthetic image with the built-in toy model and writes the
// overlay plus one image per OSSM to the current directory.

#include <cstdio>
#include <iostream>

#include "decomcam/decomcam.hpp"

int main() {
    using namespace decomcam;

    const ToyCnn model = synthetic::planted_model();
    const auto sample = synthetic::planted_sample(3);

    DecomConfig cfg;
    cfg.blur = synthetic::scaled_blur(sample.image.width());
    const Explanation ex = explain(model, model, sample.image, synthetic::planted_concept, cfg);

    write_png("saliency.png", overlay(sample.image, ex.saliency));
    for (std::size_t q = 0; q < ex.ossms.count(); ++q) {
        char name[32];
        std::snprintf(name, sizeof name, "ossm_%02zu.png", q + 1);
        write_png(name, overlay(sample.image, ex.ossms.maps[q]));
        std::cout << name << "  sigma=" << ex.ossms.singular_values[q]
                  << "  weight=" << ex.ossms.weights[q] << "\n";
    }
    const auto [r, c] = argmax_pixel(ex.saliency);
    std::cout << "peak at row " << r << ", col " << c << "; planted patch x=[" << sample.patch.x1 << ","
              << sample.patch.x2 << ") y=[" << sample.patch.y1 << "," << sample.patch.y2 << ")\n";
}
