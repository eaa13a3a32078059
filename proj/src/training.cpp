#include "placerec/training.hpp"

#include <cmath>

namespace placerec {

LossMode parse_loss_mode(const std::string& name) {
    if (name == "joint-L1") return LossMode::joint_l1;
    if (name == "combined-L1-2") return LossMode::combined_l1_2;
    if (name == "separate-per-modality") return LossMode::separate_per_modality;
    throw Error("unknown loss mode '" + name +
                "' (expected joint-L1, combined-L1-2 or separate-per-modality)");
}

const char* to_string(LossMode mode) {
    switch (mode) {
        case LossMode::joint_l1: return "joint-L1";
        case LossMode::combined_l1_2: return "combined-L1-2";
        case LossMode::separate_per_modality: return "separate-per-modality";
    }
    return "?";
}

TripletSampler::TripletSampler(const TrainSet& set, double d_pos, double d_neg) {
    if (d_pos >= d_neg)
        throw Error("triplet mining requires d_pos < d_neg");
    const int n = static_cast<int>(set.locations.size());
    if (n == 0) throw Error("empty training set");
    positives_.resize(n);
    negatives_.resize(n);
    bool any_negative = false;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double d = set.locations[i].pose.planar_distance_to(set.locations[j].pose);
            if (d <= d_pos) positives_[i].push_back(j);
            if (d >= d_neg) negatives_[i].push_back(j);
        }
        any_negative = any_negative || !negatives_[i].empty();
    }
    if (!any_negative)
        throw Error("degenerate dataset: no two locations are d_neg apart");
}

std::vector<TripletIndices> TripletSampler::sample_batch(int batch_size, Rng& rng) const {
    const int n = static_cast<int>(positives_.size());
    std::vector<TripletIndices> batch;
    batch.reserve(batch_size);
    for (int b = 0; b < batch_size; ++b) {
        TripletIndices t;
        t.anchor = static_cast<int>(rng.uniform_index(n));
        const auto& pos = positives_[t.anchor];
        const auto& neg = negatives_[t.anchor];
        if (neg.empty())
            throw Error("no valid negative exists for anchor " + std::to_string(t.anchor));
        t.positive = pos[rng.uniform_index(pos.size())];
        t.negative = neg[rng.uniform_index(neg.size())];
        batch.push_back(t);
    }
    return batch;
}

std::vector<TripletIndices> sample_triplets(const TrainSet& set, const TrainConfig& cfg,
                                            Rng& rng) {
    TripletSampler sampler(set, cfg.d_pos, cfg.d_neg);
    return sampler.sample_batch(cfg.batch_size, rng);
}

namespace {

void check_signature_shapes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error("signature shapes differ");
}

/// (distance, unit direction a - b); direction is zero at equal inputs.
std::pair<double, Eigen::MatrixXd> distance_and_direction(const Eigen::MatrixXd& a,
                                                          const Eigen::MatrixXd& b) {
    Eigen::MatrixXd diff = a - b;
    const double d = diff.norm();
    if (d > 0.0)
        diff /= d;
    else
        diff.setZero();
    return {d, std::move(diff)};
}

}  // namespace

JointTripletResult joint_triplet_loss(const SigPair& anchor, const SigPair& positive,
                                      const SigPair& negative, double margin) {
    const Eigen::MatrixXd* a[2] = {&anchor.radar, &anchor.lidar};
    const Eigen::MatrixXd* p[2] = {&positive.radar, &positive.lidar};
    const Eigen::MatrixXd* n[2] = {&negative.radar, &negative.lidar};
    for (int m = 0; m < 2; ++m) {
        check_signature_shapes(*a[0], *a[m]);
        check_signature_shapes(*a[0], *p[m]);
        check_signature_shapes(*a[0], *n[m]);
    }

    double d_pos[2][2], d_neg[2][2];
    Eigen::MatrixXd u_pos[2][2], u_neg[2][2];
    for (int am = 0; am < 2; ++am)
        for (int om = 0; om < 2; ++om) {
            std::tie(d_pos[am][om], u_pos[am][om]) = distance_and_direction(*a[am], *p[om]);
            std::tie(d_neg[am][om], u_neg[am][om]) = distance_and_direction(*a[am], *n[om]);
        }

    JointTripletResult res;
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(a[0]->rows(), a[0]->cols());
    Eigen::MatrixXd* ga[2] = {&res.grad_anchor.radar, &res.grad_anchor.lidar};
    Eigen::MatrixXd* gp[2] = {&res.grad_positive.radar, &res.grad_positive.lidar};
    Eigen::MatrixXd* gn[2] = {&res.grad_negative.radar, &res.grad_negative.lidar};
    for (int m = 0; m < 2; ++m) {
        *ga[m] = zero;
        *gp[m] = zero;
        *gn[m] = zero;
    }

    constexpr double kWeight = 1.0 / 8.0;
    for (int am = 0; am < 2; ++am)
        for (int pm = 0; pm < 2; ++pm)
            for (int nm = 0; nm < 2; ++nm) {
                const double term = margin + d_pos[am][pm] - d_neg[am][nm];
                if (term <= 0.0) continue;
                res.loss += kWeight * term;
                *ga[am] += kWeight * (u_pos[am][pm] - u_neg[am][nm]);
                *gp[pm] -= kWeight * u_pos[am][pm];
                *gn[nm] += kWeight * u_neg[am][nm];
            }
    return res;
}

TripletResult triplet_loss(const Eigen::MatrixXd& anchor, const Eigen::MatrixXd& positive,
                           const Eigen::MatrixXd& negative, double margin) {
    check_signature_shapes(anchor, positive);
    check_signature_shapes(anchor, negative);
    auto [dp, up] = distance_and_direction(anchor, positive);
    auto [dn, un] = distance_and_direction(anchor, negative);
    TripletResult res;
    const double term = margin + dp - dn;
    if (term > 0.0) {
        res.loss = term;
        res.grad_anchor = up - un;
        res.grad_positive = -up;
        res.grad_negative = un;
    } else {
        res.grad_anchor = Eigen::MatrixXd::Zero(anchor.rows(), anchor.cols());
        res.grad_positive = res.grad_anchor;
        res.grad_negative = res.grad_anchor;
    }
    return res;
}

TransformResult transform_loss(const Eigen::MatrixXd& f_radar,
                               const Eigen::MatrixXd& f_lidar) {
    check_signature_shapes(f_radar, f_lidar);
    auto [d, u] = distance_and_direction(f_radar, f_lidar);
    return {d, std::move(u)};
}

double combined_loss(double triplet_term, double transform_term, double alpha) {
    return triplet_term + alpha * transform_term;
}

void adam_step(NetParams& params, const ParamGrads& grads, AdamState& state, double lr) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    const std::size_t layers = params.layers.size();
    if (grads.w.size() != layers || state.m_w.size() != layers)
        throw Error("optimizer state does not match the parameter shapes");
    for (std::size_t l = 0; l < layers; ++l) {
        if (!grads.w[l].allFinite() || !grads.b[l].allFinite())
            throw Error("non-finite gradient at layer " + std::to_string(l));
        if (grads.w[l].rows() != params.layers[l].w.rows() ||
            grads.w[l].cols() != params.layers[l].w.cols() ||
            grads.b[l].size() != params.layers[l].b.size())
            throw Error("gradient shapes do not match layer " + std::to_string(l));
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.step));
    for (std::size_t l = 0; l < layers; ++l) {
        auto& m_w = state.m_w[l];
        auto& v_w = state.v_w[l];
        m_w = kBeta1 * m_w + (1.0 - kBeta1) * grads.w[l];
        v_w = (kBeta2 * v_w.array() + (1.0 - kBeta2) * grads.w[l].array().square()).matrix();
        params.layers[l].w.array() -=
            lr * (m_w.array() / bc1) / ((v_w.array() / bc2).sqrt() + kEps);

        auto& m_b = state.m_b[l];
        auto& v_b = state.v_b[l];
        m_b = kBeta1 * m_b + (1.0 - kBeta1) * grads.b[l];
        v_b = (kBeta2 * v_b.array() + (1.0 - kBeta2) * grads.b[l].array().square()).matrix();
        params.layers[l].b.array() -=
            lr * (m_b.array() / bc1) / ((v_b.array() / bc2).sqrt() + kEps);
    }
}

namespace {

struct RolePass {
    ForwardCache net_cache;
    SignatureCache sig_cache;
    Eigen::MatrixXd sig;
};

void backprop_signature(const NetParams& params, RolePass& pass,
                        const Eigen::MatrixXd& grad_sig, ParamGrads& grads) {
    if (grad_sig.isZero(0.0)) return;
    const Eigen::MatrixXd grad_emb = signature_backward(pass.sig_cache, grad_sig);
    net_backward(params, pass.net_cache, grad_emb, grads);
}

}  // namespace

double joint_sample_loss(const NetParams& params, const TrainLocation& anchor,
                         const TrainLocation& positive, const TrainLocation& negative,
                         double margin, double alpha, ParamGrads* grads) {
    const TrainLocation* locs[3] = {&anchor, &positive, &negative};
    RolePass pass[3][2];
    SigPair sigs[3];
    for (int r = 0; r < 3; ++r)
        for (int m = 0; m < 2; ++m) {
            const PolarDescriptor& desc = m == 0 ? locs[r]->radar : locs[r]->lidar;
            RolePass& p = pass[r][m];
            const Eigen::MatrixXd emb =
                net_forward(params, desc.values.cast<double>(), p.net_cache);
            p.sig = signature_of(emb, p.sig_cache);
            (m == 0 ? sigs[r].radar : sigs[r].lidar) = p.sig;
        }

    JointTripletResult res = joint_triplet_loss(sigs[0], sigs[1], sigs[2], margin);
    double loss = res.loss;
    SigPair* role_grads[3] = {&res.grad_anchor, &res.grad_positive, &res.grad_negative};

    if (alpha > 0.0) {
        for (int r = 0; r < 3; ++r) {
            const TransformResult tr = transform_loss(sigs[r].radar, sigs[r].lidar);
            loss += alpha * tr.loss / 3.0;
            role_grads[r]->radar += (alpha / 3.0) * tr.grad_radar;
            role_grads[r]->lidar -= (alpha / 3.0) * tr.grad_radar;
        }
    }

    if (grads) {
        for (int r = 0; r < 3; ++r) {
            backprop_signature(params, pass[r][0], role_grads[r]->radar, *grads);
            backprop_signature(params, pass[r][1], role_grads[r]->lidar, *grads);
        }
    }
    return loss;
}

double modality_sample_loss(const NetParams& params, const TrainLocation& anchor,
                            const TrainLocation& positive, const TrainLocation& negative,
                            double margin, Modality modality, ParamGrads* grads) {
    const TrainLocation* locs[3] = {&anchor, &positive, &negative};
    RolePass pass[3];
    for (int r = 0; r < 3; ++r) {
        const PolarDescriptor& desc =
            modality == Modality::radar ? locs[r]->radar : locs[r]->lidar;
        const Eigen::MatrixXd emb =
            net_forward(params, desc.values.cast<double>(), pass[r].net_cache);
        pass[r].sig = signature_of(emb, pass[r].sig_cache);
    }
    TripletResult res = triplet_loss(pass[0].sig, pass[1].sig, pass[2].sig, margin);
    if (grads) {
        backprop_signature(params, pass[0], res.grad_anchor, *grads);
        backprop_signature(params, pass[1], res.grad_positive, *grads);
        backprop_signature(params, pass[2], res.grad_negative, *grads);
    }
    return res.loss;
}

TrainResult train(const TrainSet& set, const TrainConfig& cfg) {
    if (cfg.margin <= 0.0) throw Error("margin must be positive");
    if (cfg.alpha <= 0.0) throw Error("alpha must be positive");
    if (cfg.batch_size < 1) throw Error("batch_size must be >= 1");
    if (cfg.epochs < 0 || cfg.samples_per_epoch < 0)
        throw Error("epochs and samples_per_epoch must be non-negative");

    TrainResult result;
    if (cfg.loss_mode == LossMode::separate_per_modality) {
        const std::uint64_t radar_seed =
            Rng::keyed(cfg.seed, streams::modality_net, 0).next_u64();
        const std::uint64_t lidar_seed =
            Rng::keyed(cfg.seed, streams::modality_net, 1).next_u64();
        result.nets = {init_params(radar_seed, cfg.base_channels),
                       init_params(lidar_seed, cfg.base_channels)};
    } else {
        result.nets = {init_params(cfg.seed, cfg.base_channels)};
    }
    for (const NetParams& net : result.nets)
        result.opt.push_back(zero_adam_state(net));

    const int steps_per_epoch = cfg.samples_per_epoch / cfg.batch_size;
    if (cfg.epochs == 0 || steps_per_epoch == 0) return result;

    TripletSampler sampler(set, cfg.d_pos, cfg.d_neg);
    Rng rng = Rng::keyed(cfg.seed, streams::triplets);
    result.history.reserve(static_cast<std::size_t>(cfg.epochs) * steps_per_epoch);

    const double inv_batch = 1.0 / cfg.batch_size;
    double lr = cfg.lr;
    int global_step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int s = 0; s < steps_per_epoch; ++s) {
            const std::vector<TripletIndices> batch =
                sampler.sample_batch(cfg.batch_size, rng);
            double batch_loss = 0.0;
            if (cfg.loss_mode == LossMode::separate_per_modality) {
                const Modality mods[2] = {Modality::radar, Modality::lidar};
                double mode_loss = 0.0;
                for (int net_i = 0; net_i < 2; ++net_i) {
                    ParamGrads grads = zero_grads(result.nets[net_i]);
                    double loss = 0.0;
                    for (const TripletIndices& t : batch)
                        loss += modality_sample_loss(
                            result.nets[net_i], set.locations[t.anchor],
                            set.locations[t.positive], set.locations[t.negative],
                            cfg.margin, mods[net_i], &grads);
                    for (std::size_t l = 0; l < grads.w.size(); ++l) {
                        grads.w[l] *= inv_batch;
                        grads.b[l] *= inv_batch;
                    }
                    adam_step(result.nets[net_i], grads, result.opt[net_i], lr);
                    mode_loss += loss * inv_batch;
                }
                batch_loss = 0.5 * mode_loss;
            } else {
                const double alpha =
                    cfg.loss_mode == LossMode::combined_l1_2 ? cfg.alpha : 0.0;
                ParamGrads grads = zero_grads(result.nets[0]);
                for (const TripletIndices& t : batch)
                    batch_loss += joint_sample_loss(
                        result.nets[0], set.locations[t.anchor],
                        set.locations[t.positive], set.locations[t.negative],
                        cfg.margin, alpha, &grads);
                for (std::size_t l = 0; l < grads.w.size(); ++l) {
                    grads.w[l] *= inv_batch;
                    grads.b[l] *= inv_batch;
                }
                adam_step(result.nets[0], grads, result.opt[0], lr);
                batch_loss *= inv_batch;
            }
            ++global_step;
            result.history.push_back({global_step, epoch, batch_loss, lr});
        }
        lr *= cfg.lr_decay;
    }
    return result;
}

}  // namespace placerec
