#pragma once

// Reference implementations, written straight off the definitions and kept
// structurally independent of the library. Tests compare the two versions.

#include <array>

#include <Eigen/Dense>

#include "orchard/features.hpp"
#include "orchard/image.hpp"

namespace oracle {

// Literal bit-by-bit evaluation of the sign code at one center.
int lbp_code(const orchard::PlaneXd& plane, int row, int col, int neighbors, double radius);

// Exhaustive double loop over valid centers; normalized 2^N histogram.
Eigen::VectorXd lbp_histogram(const orchard::PlaneXd& plane, int neighbors, double radius,
                              const orchard::MaskXb* mask = nullptr);

// Straight-line sign/magnitude/center evaluation; layout and normalization
// match the library's concatenated output.
Eigen::VectorXd clbp_histogram(const orchard::PlaneXd& plane, int neighbors, double radius,
                               orchard::ClbpThreshold threshold,
                               const orchard::MaskXb* mask = nullptr);

// Per-pixel joint-histogram count over an 8-bit image.
Eigen::VectorXd gch(const orchard::ImageU8& img, int bins, const orchard::MaskXb* mask = nullptr);

// Blur, quantize, then union-find over 8-connected same-bucket pixels.
Eigen::VectorXd ccv(const orchard::ImageU8& img, int n_colors, int tau,
                    const orchard::MaskXb* mask = nullptr);

// Textbook sRGB (D65) converters with published constants.
std::array<double, 3> rgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
std::array<double, 3> rgb_to_hsv(std::uint8_t r, std::uint8_t g, std::uint8_t b);

}  // namespace oracle
