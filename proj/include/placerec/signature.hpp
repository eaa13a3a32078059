#pragma once

#include <Eigen/Dense>

#include "placerec/io.hpp"

namespace placerec {

inline constexpr int kSignatureSize = 32;

/// Centered 2D DFT magnitude sqrt(re^2 + im^2 + 1e-12), zero frequency at
/// (rows/2, cols/2).
Eigen::MatrixXd dft2_magnitude(const Eigen::MatrixXd& m);

/// Central 32x32 block (rows 4..35, cols 44..75) of a centered 40x120
/// spectrum.
Eigen::MatrixXd lowpass_crop(const Eigen::MatrixXd& centered);

/// State retained by signature_of for the backward pass.
struct SignatureCache {
    Eigen::MatrixXcd spectrum;   // uncentered DFT of the embedding
    Eigen::MatrixXd magnitude;   // uncentered magnitudes
    Eigen::MatrixXd signature;   // normalized output
    double norm = 0.0;
    bool zero_input = false;
};

/// Low-frequency DFT-magnitude fingerprint of a 40x120 embedding,
/// L2-normalized over the flattened crop; all-zero input gives an all-zero
/// signature.
Eigen::MatrixXd signature_of(const Eigen::MatrixXd& embedding);
Eigen::MatrixXd signature_of(const Eigen::MatrixXd& embedding, SignatureCache& cache);

/// Gradient of a scalar loss w.r.t. the embedding, given its gradient
/// w.r.t. the signature.
Eigen::MatrixXd signature_backward(const SignatureCache& cache,
                                   const Eigen::MatrixXd& grad_signature);

/// Euclidean distance between flattened signatures; [0, 2] for unit-norm
/// inputs.
double signature_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace placerec
