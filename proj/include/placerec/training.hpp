#pragma once

#include <string>
#include <vector>

#include "placerec/network.hpp"
#include "placerec/rng.hpp"
#include "placerec/signature.hpp"

namespace placerec {

enum class LossMode { joint_l1, combined_l1_2, separate_per_modality };

LossMode parse_loss_mode(const std::string& name);
const char* to_string(LossMode mode);

struct TrainConfig {
    double margin = 1.0;
    double alpha = 0.2;
    double lr = 0.001;
    double lr_decay = 0.9;
    int batch_size = 16;
    int epochs = 6;
    int samples_per_epoch = 1400;
    double d_pos = 3.0;
    double d_neg = 25.0;
    LossMode loss_mode = LossMode::joint_l1;
    std::uint64_t seed = 0;
    int base_channels = 8;
};

/// One training location: paired descriptors of both sensors at one pose.
struct TrainLocation {
    PolarDescriptor lidar;
    PolarDescriptor radar;
    Pose2D pose;
};

struct TrainSet {
    std::vector<TrainLocation> locations;
};

struct TripletIndices {
    int anchor = 0;
    int positive = 0;
    int negative = 0;
};

/// Precomputed positive (within d_pos, anchor included) and negative
/// (at least d_neg away) index lists per location.
class TripletSampler {
public:
    TripletSampler(const TrainSet& set, double d_pos, double d_neg);

    /// Uniform anchor, then uniform positive/negative from its lists;
    /// three draws per triplet in a fixed order.
    std::vector<TripletIndices> sample_batch(int batch_size, Rng& rng) const;

    const std::vector<int>& positives_of(int i) const { return positives_[i]; }
    const std::vector<int>& negatives_of(int i) const { return negatives_[i]; }

private:
    std::vector<std::vector<int>> positives_;
    std::vector<std::vector<int>> negatives_;
};

std::vector<TripletIndices> sample_triplets(const TrainSet& set,
                                            const TrainConfig& cfg, Rng& rng);

/// Radar and lidar signatures of one location.
struct SigPair {
    Eigen::MatrixXd radar;
    Eigen::MatrixXd lidar;
};

struct JointTripletResult {
    double loss = 0.0;
    SigPair grad_anchor, grad_positive, grad_negative;
};

/// Mean over the 2^3 anchor/positive/negative modality assignments of
/// max(0, margin + d(anchor, positive) - d(anchor, negative)), with exact
/// subgradients (zero on inactive hinges).
JointTripletResult joint_triplet_loss(const SigPair& anchor, const SigPair& positive,
                                      const SigPair& negative, double margin);

struct TripletResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_anchor, grad_positive, grad_negative;
};

/// Single-modality hinge triplet loss over three signatures.
TripletResult triplet_loss(const Eigen::MatrixXd& anchor,
                           const Eigen::MatrixXd& positive,
                           const Eigen::MatrixXd& negative, double margin);

struct TransformResult {
    double loss = 0.0;
    Eigen::MatrixXd grad_radar;  // grad w.r.t. the lidar signature is its negation
};

/// Euclidean norm of the signature difference; gradient defined 0 at equality.
TransformResult transform_loss(const Eigen::MatrixXd& f_radar,
                               const Eigen::MatrixXd& f_lidar);

double combined_loss(double triplet_term, double transform_term, double alpha);

/// Loss of one triplet under the shared network: the eight-way hinge plus,
/// for alpha > 0, the modality-alignment distance averaged over the three
/// roles. When grads is non-null the parameter gradients are accumulated
/// into it.
double joint_sample_loss(const NetParams& params, const TrainLocation& anchor,
                         const TrainLocation& positive, const TrainLocation& negative,
                         double margin, double alpha, ParamGrads* grads);

/// Single-modality counterpart used when each sensor gets its own network.
double modality_sample_loss(const NetParams& params, const TrainLocation& anchor,
                            const TrainLocation& positive, const TrainLocation& negative,
                            double margin, Modality modality, ParamGrads* grads);

/// Bias-corrected Adam with betas (0.9, 0.999) and epsilon 1e-8 outside the
/// square root. Rejects non-finite gradients.
void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state,
               double lr);

struct LossRecord {
    int step = 0;  // 1-based global step
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    /// One shared network, or {radar, lidar} in separate-per-modality mode.
    std::vector<NetParams> nets;
    std::vector<AdamState> opt;
    std::vector<LossRecord> history;

    bool separate() const { return nets.size() == 2; }
    const NetParams& net_for(Modality m) const {
        return separate() ? nets[m == Modality::radar ? 0 : 1] : nets[0];
    }
};

/// Runs epochs x (samples_per_epoch / batch_size) optimizer steps with the
/// learning rate multiplied by lr_decay after each epoch. Deterministic
/// given cfg.seed.
TrainResult train(const TrainSet& set, const TrainConfig& cfg);

}  // namespace placerec
