#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "placerec/io.hpp"

namespace placerec {

/// One 3x3 convolution. Kernels are stored GEMM-ready as out_c x (9*in_c)
/// with column ((dj+1)*3 + (di+1))*in_c + ic, where di runs over ring
/// offsets and dj over sector offsets.
struct ConvLayer {
    int out_c = 0;
    int in_c = 0;
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
};

/// Weights of the fixed two-level U-Net (shared across modalities).
struct NetParams {
    int base_channels = 8;
    std::vector<ConvLayer> layers;
};

struct ParamGrads {
    std::vector<Eigen::MatrixXd> w;
    std::vector<Eigen::VectorXd> b;
};

/// Per-layer activations retained by net_forward for the backward pass.
/// Feature maps are channels x (H*W) with pixel p = sector*H + ring.
struct ForwardCache {
    Eigen::MatrixXd x, h1, h2, p1, h3, h4, p2, h5, h6, cat1, h7, cat2, h8;
};

struct AdamState {
    std::vector<Eigen::MatrixXd> m_w, v_w;
    std::vector<Eigen::VectorXd> m_b, v_b;
    std::int64_t step = 0;
};

/// (out_channels, in_channels) for the nine conv layers at a given width.
std::vector<std::pair<int, int>> net_layer_shapes(int base_channels);

/// Kernels uniform in +-sqrt(3/fan_in) (quantized to f32 so checkpoints
/// round-trip bitwise), biases zero.
NetParams init_params(std::uint64_t seed, int base_channels = 8);

std::size_t param_count(const NetParams& params);

ParamGrads zero_grads(const NetParams& params);
AdamState zero_adam_state(const NetParams& params);

/// 40x120 descriptor values in, 40x120 embedding out. Circular padding on
/// the sector axis, zero padding on rings; both modalities use the same
/// parameters.
Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& input);
Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& input,
                            ForwardCache& cache);

/// Exact reverse-mode gradients; accumulates into grads and returns the
/// gradient w.r.t. the input.
Eigen::MatrixXd net_backward(const NetParams& params, const ForwardCache& cache,
                             const Eigen::MatrixXd& grad_output, ParamGrads& grads);

struct Checkpoint {
    NetParams params;
    AdamState opt;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
};

std::vector<std::uint8_t> encode_checkpoint(const NetParams& params,
                                            const AdamState& opt,
                                            std::uint64_t step, std::uint64_t seed);
/// expected_base_channels = 0 accepts whatever width the file declares.
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             int expected_base_channels = 0);

void write_checkpoint(const std::filesystem::path& path, const NetParams& params,
                      const AdamState& opt, std::uint64_t step, std::uint64_t seed);
Checkpoint read_checkpoint(const std::filesystem::path& path,
                           int expected_base_channels = 0);

}  // namespace placerec
