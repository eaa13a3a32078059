#include "placerec/network.hpp"

#include <cmath>
#include <cstring>

#include "placerec/rng.hpp"

namespace placerec {

namespace {

constexpr int kRings = 40;
constexpr int kSectors = 120;

int internal_col(int in_c, int ic, int di, int dj) {
    return ((dj + 1) * 3 + (di + 1)) * in_c + ic;
}

/// Stacks the three ring-shifted copies of x (zero padded at ring edges)
/// so each 3x1 kernel column becomes part of one GEMM operand.
Eigen::MatrixXd stack_ring_bands(const Eigen::MatrixXd& x, int h, int w) {
    const int c = static_cast<int>(x.rows());
    Eigen::MatrixXd x3(3 * c, h * w);
    for (int j = 0; j < w; ++j) {
        const int p = j * h;
        x3.block(0, p, c, 1).setZero();
        x3.block(0, p + 1, c, h - 1) = x.block(0, p, c, h - 1);
        x3.block(c, p, c, h) = x.block(0, p, c, h);
        x3.block(2 * c, p, c, h - 1) = x.block(0, p + 1, c, h - 1);
        x3.block(2 * c, p + h - 1, c, 1).setZero();
    }
    return x3;
}

void conv_forward(const ConvLayer& layer, const Eigen::MatrixXd& x, int h, int w,
                  Eigen::MatrixXd& y) {
    const int tri = 3 * layer.in_c;
    const Eigen::MatrixXd x3 = stack_ring_bands(x, h, w);
    const auto wm = layer.w.middleCols(tri, tri);      // dj = 0
    const auto wp = layer.w.middleCols(2 * tri, tri);  // dj = +1
    const auto wn = layer.w.middleCols(0, tri);        // dj = -1
    const int body = (w - 1) * h;

    y.noalias() = wm * x3;
    y.leftCols(body).noalias() += wp * x3.rightCols(body);
    y.rightCols(h).noalias() += wp * x3.leftCols(h);
    y.middleCols(h, body).noalias() += wn * x3.leftCols(body);
    y.leftCols(h).noalias() += wn * x3.rightCols(h);
    y.colwise() += layer.b;
}

void conv_backward(const ConvLayer& layer, const Eigen::MatrixXd& x,
                   const Eigen::MatrixXd& dy, int h, int w, Eigen::MatrixXd& dw,
                   Eigen::VectorXd& db, Eigen::MatrixXd& dx) {
    const int c = layer.in_c;
    const int tri = 3 * c;
    const Eigen::MatrixXd x3 = stack_ring_bands(x, h, w);
    const int body = (w - 1) * h;

    db = dy.rowwise().sum();

    dw.resize(layer.out_c, 9 * c);
    dw.middleCols(tri, tri).noalias() = dy * x3.transpose();
    dw.middleCols(2 * tri, tri).noalias() =
        dy.leftCols(body) * x3.rightCols(body).transpose() +
        dy.rightCols(h) * x3.leftCols(h).transpose();
    dw.middleCols(0, tri).noalias() =
        dy.middleCols(h, body) * x3.leftCols(body).transpose() +
        dy.leftCols(h) * x3.rightCols(h).transpose();

    const auto wm = layer.w.middleCols(tri, tri);
    const auto wp = layer.w.middleCols(2 * tri, tri);
    const auto wn = layer.w.middleCols(0, tri);
    Eigen::MatrixXd dx3(tri, h * w);
    dx3.noalias() = wm.transpose() * dy;
    dx3.rightCols(body).noalias() += wp.transpose() * dy.leftCols(body);
    dx3.leftCols(h).noalias() += wp.transpose() * dy.rightCols(h);
    dx3.leftCols(body).noalias() += wn.transpose() * dy.middleCols(h, body);
    dx3.rightCols(h).noalias() += wn.transpose() * dy.leftCols(h);

    dx = Eigen::MatrixXd::Zero(c, h * w);
    for (int j = 0; j < w; ++j) {
        const int p = j * h;
        dx.block(0, p, c, h - 1) += dx3.block(0, p + 1, c, h - 1);
        dx.block(0, p, c, h) += dx3.block(c, p, c, h);
        dx.block(0, p + 1, c, h - 1) += dx3.block(2 * c, p, c, h - 1);
    }
}

Eigen::MatrixXd avg_pool2(const Eigen::MatrixXd& x, int h, int w) {
    const int c = static_cast<int>(x.rows());
    const int h2 = h / 2, w2 = w / 2;
    Eigen::MatrixXd y(c, h2 * w2);
    for (int j = 0; j < w2; ++j)
        for (int i = 0; i < h2; ++i) {
            const int a = (2 * j) * h + 2 * i;
            const int b = (2 * j + 1) * h + 2 * i;
            y.col(j * h2 + i) =
                0.25 * (x.col(a) + x.col(a + 1) + x.col(b) + x.col(b + 1));
        }
    return y;
}

/// h, w are the pre-pool input dimensions.
Eigen::MatrixXd avg_pool2_backward(const Eigen::MatrixXd& dy, int h, int w) {
    const int c = static_cast<int>(dy.rows());
    const int h2 = h / 2, w2 = w / 2;
    Eigen::MatrixXd dx(c, h * w);
    for (int j = 0; j < w2; ++j)
        for (int i = 0; i < h2; ++i) {
            const Eigen::VectorXd g = 0.25 * dy.col(j * h2 + i);
            const int a = (2 * j) * h + 2 * i;
            const int b = (2 * j + 1) * h + 2 * i;
            dx.col(a) = g;
            dx.col(a + 1) = g;
            dx.col(b) = g;
            dx.col(b + 1) = g;
        }
    return dx;
}

/// h, w are the input dimensions; output is 2h x 2w.
Eigen::MatrixXd upsample2(const Eigen::MatrixXd& x, int h, int w) {
    const int c = static_cast<int>(x.rows());
    Eigen::MatrixXd y(c, 4 * h * w);
    const int h2 = 2 * h;
    for (int j = 0; j < 2 * w; ++j)
        for (int i = 0; i < h2; ++i)
            y.col(j * h2 + i) = x.col((j / 2) * h + i / 2);
    return y;
}

Eigen::MatrixXd upsample2_backward(const Eigen::MatrixXd& dy, int h, int w) {
    const int c = static_cast<int>(dy.rows());
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(c, h * w);
    const int h2 = 2 * h;
    for (int j = 0; j < 2 * w; ++j)
        for (int i = 0; i < h2; ++i)
            dx.col((j / 2) * h + i / 2) += dy.col(j * h2 + i);
    return dx;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask_grad(const Eigen::MatrixXd& post, const Eigen::MatrixXd& g) {
    return (post.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
}

Eigen::MatrixXd concat_rows(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
    Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    out.bottomRows(bottom.rows()) = bottom;
    return out;
}

void check_input_shape(const Eigen::MatrixXd& input) {
    if (input.rows() != kRings || input.cols() != kSectors)
        throw Error("network input must be 40x120, got " +
                    std::to_string(input.rows()) + "x" + std::to_string(input.cols()));
}

void check_params(const NetParams& params) {
    const auto shapes = net_layer_shapes(params.base_channels);
    if (params.layers.size() != shapes.size())
        throw Error("network expects " + std::to_string(shapes.size()) + " layers");
    for (std::size_t l = 0; l < shapes.size(); ++l) {
        const ConvLayer& layer = params.layers[l];
        if (layer.out_c != shapes[l].first || layer.in_c != shapes[l].second ||
            layer.w.rows() != layer.out_c || layer.w.cols() != 9 * layer.in_c ||
            layer.b.size() != layer.out_c)
            throw Error("layer " + std::to_string(l) + " has inconsistent shapes");
    }
}

}  // namespace

std::vector<std::pair<int, int>> net_layer_shapes(int base_channels) {
    const int c = base_channels;
    return {{c, 1},      {c, c},     {2 * c, c},     {2 * c, 2 * c}, {4 * c, 2 * c},
            {4 * c, 4 * c}, {2 * c, 6 * c}, {c, 3 * c}, {1, c}};
}

NetParams init_params(std::uint64_t seed, int base_channels) {
    if (base_channels < 1)
        throw Error("base_channels must be >= 1");
    Rng rng = Rng::keyed(seed, streams::net_init);
    NetParams params;
    params.base_channels = base_channels;
    for (const auto& [out_c, in_c] : net_layer_shapes(base_channels)) {
        ConvLayer layer;
        layer.out_c = out_c;
        layer.in_c = in_c;
        layer.w.resize(out_c, 9 * in_c);
        layer.b = Eigen::VectorXd::Zero(out_c);
        const double scale = std::sqrt(3.0 / (9.0 * in_c));
        for (int oc = 0; oc < out_c; ++oc)
            for (int ic = 0; ic < in_c; ++ic)
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        layer.w(oc, internal_col(in_c, ic, di, dj)) =
                            static_cast<float>(rng.uniform(-scale, scale));
        params.layers.push_back(std::move(layer));
    }
    return params;
}

std::size_t param_count(const NetParams& params) {
    std::size_t n = 0;
    for (const ConvLayer& layer : params.layers)
        n += static_cast<std::size_t>(layer.w.size()) + layer.b.size();
    return n;
}

ParamGrads zero_grads(const NetParams& params) {
    ParamGrads grads;
    for (const ConvLayer& layer : params.layers) {
        grads.w.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
        grads.b.push_back(Eigen::VectorXd::Zero(layer.b.size()));
    }
    return grads;
}

AdamState zero_adam_state(const NetParams& params) {
    AdamState state;
    for (const ConvLayer& layer : params.layers) {
        state.m_w.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
        state.v_w.push_back(Eigen::MatrixXd::Zero(layer.w.rows(), layer.w.cols()));
        state.m_b.push_back(Eigen::VectorXd::Zero(layer.b.size()));
        state.v_b.push_back(Eigen::VectorXd::Zero(layer.b.size()));
    }
    return state;
}

Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& input) {
    ForwardCache cache;
    return net_forward(params, input, cache);
}

Eigen::MatrixXd net_forward(const NetParams& params, const Eigen::MatrixXd& input,
                            ForwardCache& cache) {
    check_params(params);
    check_input_shape(input);
    const auto& L = params.layers;
    Eigen::MatrixXd t;

    cache.x = Eigen::Map<const Eigen::MatrixXd>(input.data(), 1, kRings * kSectors);
    conv_forward(L[0], cache.x, kRings, kSectors, t);
    cache.h1 = relu(t);
    conv_forward(L[1], cache.h1, kRings, kSectors, t);
    cache.h2 = relu(t);
    cache.p1 = avg_pool2(cache.h2, kRings, kSectors);

    conv_forward(L[2], cache.p1, kRings / 2, kSectors / 2, t);
    cache.h3 = relu(t);
    conv_forward(L[3], cache.h3, kRings / 2, kSectors / 2, t);
    cache.h4 = relu(t);
    cache.p2 = avg_pool2(cache.h4, kRings / 2, kSectors / 2);

    conv_forward(L[4], cache.p2, kRings / 4, kSectors / 4, t);
    cache.h5 = relu(t);
    conv_forward(L[5], cache.h5, kRings / 4, kSectors / 4, t);
    cache.h6 = relu(t);

    cache.cat1 = concat_rows(upsample2(cache.h6, kRings / 4, kSectors / 4), cache.h4);
    conv_forward(L[6], cache.cat1, kRings / 2, kSectors / 2, t);
    cache.h7 = relu(t);

    cache.cat2 = concat_rows(upsample2(cache.h7, kRings / 2, kSectors / 2), cache.h2);
    conv_forward(L[7], cache.cat2, kRings, kSectors, t);
    cache.h8 = relu(t);

    Eigen::MatrixXd y;
    conv_forward(L[8], cache.h8, kRings, kSectors, y);
    return Eigen::Map<const Eigen::MatrixXd>(y.data(), kRings, kSectors);
}

Eigen::MatrixXd net_backward(const NetParams& params, const ForwardCache& cache,
                             const Eigen::MatrixXd& grad_output, ParamGrads& grads) {
    check_params(params);
    check_input_shape(grad_output);
    if (cache.x.size() != kRings * kSectors || grads.w.size() != params.layers.size())
        throw Error("forward cache or gradient buffers do not match the network");
    const auto& L = params.layers;
    const int h1 = kRings, w1 = kSectors;
    const int h2 = kRings / 2, w2 = kSectors / 2;
    const int h4 = kRings / 4, w4 = kSectors / 4;
    const int c = params.base_channels;

    Eigen::MatrixXd dw;
    Eigen::VectorXd db;
    Eigen::MatrixXd g =
        Eigen::Map<const Eigen::MatrixXd>(grad_output.data(), 1, h1 * w1);

    conv_backward(L[8], cache.h8, g, h1, w1, dw, db, g);
    grads.w[8] += dw;
    grads.b[8] += db;

    g = relu_mask_grad(cache.h8, g);
    conv_backward(L[7], cache.cat2, g, h1, w1, dw, db, g);
    grads.w[7] += dw;
    grads.b[7] += db;

    Eigen::MatrixXd dh7 = upsample2_backward(g.topRows(2 * c), h2, w2);
    Eigen::MatrixXd dh2_skip = g.bottomRows(c);

    dh7 = relu_mask_grad(cache.h7, dh7);
    conv_backward(L[6], cache.cat1, dh7, h2, w2, dw, db, g);
    grads.w[6] += dw;
    grads.b[6] += db;

    Eigen::MatrixXd dh6 = upsample2_backward(g.topRows(4 * c), h4, w4);
    Eigen::MatrixXd dh4_skip = g.bottomRows(2 * c);

    dh6 = relu_mask_grad(cache.h6, dh6);
    conv_backward(L[5], cache.h5, dh6, h4, w4, dw, db, g);
    grads.w[5] += dw;
    grads.b[5] += db;

    g = relu_mask_grad(cache.h5, g);
    conv_backward(L[4], cache.p2, g, h4, w4, dw, db, g);
    grads.w[4] += dw;
    grads.b[4] += db;

    Eigen::MatrixXd dh4 = avg_pool2_backward(g, h2, w2) + dh4_skip;
    dh4 = relu_mask_grad(cache.h4, dh4);
    conv_backward(L[3], cache.h3, dh4, h2, w2, dw, db, g);
    grads.w[3] += dw;
    grads.b[3] += db;

    g = relu_mask_grad(cache.h3, g);
    conv_backward(L[2], cache.p1, g, h2, w2, dw, db, g);
    grads.w[2] += dw;
    grads.b[2] += db;

    Eigen::MatrixXd dh2 = avg_pool2_backward(g, h1, w1) + dh2_skip;
    dh2 = relu_mask_grad(cache.h2, dh2);
    conv_backward(L[1], cache.h1, dh2, h1, w1, dw, db, g);
    grads.w[1] += dw;
    grads.b[1] += db;

    g = relu_mask_grad(cache.h1, g);
    conv_backward(L[0], cache.x, g, h1, w1, dw, db, g);
    grads.w[0] += dw;
    grads.b[0] += db;

    return Eigen::Map<const Eigen::MatrixXd>(g.data(), kRings, kSectors);
}

// --- checkpoints ---

namespace {

void append_f32(std::vector<std::uint8_t>& out, float v) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    out.insert(out.end(), b, b + 4);
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    std::uint8_t b[8];
    std::memcpy(b, &v, 8);
    out.insert(out.end(), b, b + 8);
}

/// Serialization order for kernels is (out, in, di, dj).
void append_kernel(std::vector<std::uint8_t>& out, const ConvLayer& layer) {
    for (int oc = 0; oc < layer.out_c; ++oc)
        for (int ic = 0; ic < layer.in_c; ++ic)
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    append_f32(out, static_cast<float>(
                                        layer.w(oc, internal_col(layer.in_c, ic, di, dj))));
}

void append_kernel_shaped(std::vector<std::uint8_t>& out, const Eigen::MatrixXd& w,
                          int out_c, int in_c) {
    for (int oc = 0; oc < out_c; ++oc)
        for (int ic = 0; ic < in_c; ++ic)
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    append_f32(out, static_cast<float>(
                                        w(oc, internal_col(in_c, ic, di, dj))));
}

void append_vector(std::vector<std::uint8_t>& out, const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
        append_f32(out, static_cast<float>(v(i)));
}

class CheckpointReader {
public:
    explicit CheckpointReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

    std::uint32_t u32() { return take<std::uint32_t>(); }
    std::uint64_t u64() { return take<std::uint64_t>(); }
    float f32() { return take<float>(); }

    void expect_magic() {
        if (buf_.size() - pos_ < 4)
            throw IoError(IoErrorKind::truncated, "file shorter than its magic tag");
        if (std::memcmp(buf_.data() + pos_, "HPRN", 4) != 0)
            throw IoError(IoErrorKind::bad_magic, "expected magic 'HPRN'");
        pos_ += 4;
    }

    void read_kernel(Eigen::MatrixXd& w, int out_c, int in_c) {
        w.resize(out_c, 9 * in_c);
        for (int oc = 0; oc < out_c; ++oc)
            for (int ic = 0; ic < in_c; ++ic)
                for (int di = -1; di <= 1; ++di)
                    for (int dj = -1; dj <= 1; ++dj)
                        w(oc, internal_col(in_c, ic, di, dj)) = f32();
    }

    void read_vector(Eigen::VectorXd& v, int n) {
        v.resize(n);
        for (int i = 0; i < n; ++i) v(i) = f32();
    }

    void finish() {
        if (pos_ != buf_.size())
            throw IoError(IoErrorKind::trailing_data,
                          std::to_string(buf_.size() - pos_) + " trailing bytes");
    }

private:
    template <typename T>
    T take() {
        if (buf_.size() - pos_ < sizeof(T))
            throw IoError(IoErrorKind::truncated, "unexpected end of checkpoint");
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const NetParams& params,
                                            const AdamState& opt,
                                            std::uint64_t step, std::uint64_t seed) {
    check_params(params);
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'H', 'P', 'R', 'N'});
    append_u32(out, 1);
    append_u64(out, step);
    append_u64(out, seed);
    append_u32(out, static_cast<std::uint32_t>(params.layers.size()));
    for (const ConvLayer& layer : params.layers) {
        append_u32(out, static_cast<std::uint32_t>(layer.out_c));
        append_u32(out, static_cast<std::uint32_t>(layer.in_c));
        append_u32(out, 3);
        append_u32(out, 3);
        append_kernel(out, layer);
        append_vector(out, layer.b);
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        append_kernel_shaped(out, opt.m_w[l], params.layers[l].out_c,
                             params.layers[l].in_c);
        append_vector(out, opt.m_b[l]);
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        append_kernel_shaped(out, opt.v_w[l], params.layers[l].out_c,
                             params.layers[l].in_c);
        append_vector(out, opt.v_b[l]);
    }
    return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             int expected_base_channels) {
    CheckpointReader r(bytes);
    r.expect_magic();
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw IoError(IoErrorKind::bad_version,
                      "unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    ckpt.step = r.u64();
    ckpt.seed = r.u64();
    const std::uint32_t layer_count = r.u32();
    if (layer_count != 9)
        throw IoError(IoErrorKind::shape_mismatch,
                      "expected 9 layers, file declares " + std::to_string(layer_count));

    // Read the shape table and payload layer by layer; sizes are validated
    // against the actual bytes as we go, so a corrupt count cannot trigger
    // an oversized allocation.
    std::vector<std::pair<int, int>> file_shapes;
    ckpt.params.layers.resize(layer_count);
    for (std::uint32_t l = 0; l < layer_count; ++l) {
        const std::uint32_t out_c = r.u32();
        const std::uint32_t in_c = r.u32();
        const std::uint32_t kh = r.u32();
        const std::uint32_t kw = r.u32();
        if (out_c == 0 || in_c == 0 || kh != 3 || kw != 3 || out_c > 100000 ||
            in_c > 100000)
            throw IoError(IoErrorKind::shape_mismatch,
                          "layer " + std::to_string(l) + " has invalid shape");
        ConvLayer& layer = ckpt.params.layers[l];
        layer.out_c = static_cast<int>(out_c);
        layer.in_c = static_cast<int>(in_c);
        if (std::uint64_t(out_c) * in_c * 9 + out_c > bytes.size() / 4 + 1)
            throw IoError(IoErrorKind::truncated,
                          "layer " + std::to_string(l) + " larger than the file");
        r.read_kernel(layer.w, layer.out_c, layer.in_c);
        r.read_vector(layer.b, layer.out_c);
        file_shapes.emplace_back(layer.out_c, layer.in_c);
    }

    const int base = ckpt.params.layers[0].out_c;
    const auto want = net_layer_shapes(base);
    for (std::size_t l = 0; l < want.size(); ++l)
        if (file_shapes[l] != want[l])
            throw IoError(IoErrorKind::shape_mismatch,
                          "layer " + std::to_string(l) + " is " +
                              std::to_string(file_shapes[l].first) + "x" +
                              std::to_string(file_shapes[l].second) + ", expected " +
                              std::to_string(want[l].first) + "x" +
                              std::to_string(want[l].second));
    if (expected_base_channels != 0 && base != expected_base_channels)
        throw IoError(IoErrorKind::shape_mismatch,
                      "layer 0 has " + std::to_string(base) + " channels, expected " +
                          std::to_string(expected_base_channels));
    ckpt.params.base_channels = base;

    for (auto& layer : ckpt.params.layers) {
        Eigen::MatrixXd m_w;
        Eigen::VectorXd m_b;
        r.read_kernel(m_w, layer.out_c, layer.in_c);
        r.read_vector(m_b, layer.out_c);
        ckpt.opt.m_w.push_back(std::move(m_w));
        ckpt.opt.m_b.push_back(std::move(m_b));
    }
    for (auto& layer : ckpt.params.layers) {
        Eigen::MatrixXd v_w;
        Eigen::VectorXd v_b;
        r.read_kernel(v_w, layer.out_c, layer.in_c);
        r.read_vector(v_b, layer.out_c);
        ckpt.opt.v_w.push_back(std::move(v_w));
        ckpt.opt.v_b.push_back(std::move(v_b));
    }
    ckpt.opt.step = static_cast<std::int64_t>(ckpt.step);
    r.finish();
    return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const NetParams& params,
                      const AdamState& opt, std::uint64_t step, std::uint64_t seed) {
    atomic_write_file(path, encode_checkpoint(params, opt, step, seed));
}

Checkpoint read_checkpoint(const std::filesystem::path& path,
                           int expected_base_channels) {
    return decode_checkpoint(read_file_bytes(path), expected_base_channels);
}

}  // namespace placerec
