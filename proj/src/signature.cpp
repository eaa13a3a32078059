#include "placerec/signature.hpp"

#include <complex>
#include <map>

namespace placerec {

namespace {

constexpr double kMagnitudeEps = 1e-12;
constexpr int kCropRow = 4;
constexpr int kCropCol = 44;
constexpr int kEmbeddingRows = 40;
constexpr int kEmbeddingCols = 120;

// Symmetric DFT matrix D[k][n] = exp(-2*pi*i*k*n/N).
const Eigen::MatrixXcd& dft_matrix(int n) {
    static std::map<int, Eigen::MatrixXcd> cache;
    auto it = cache.find(n);
    if (it == cache.end()) {
        Eigen::MatrixXcd d(n, n);
        for (int k = 0; k < n; ++k)
            for (int j = 0; j < n; ++j) {
                const double phase = -2.0 * kPi * k * j / n;
                d(k, j) = std::complex<double>(std::cos(phase), std::sin(phase));
            }
        it = cache.emplace(n, std::move(d)).first;
    }
    return it->second;
}

Eigen::MatrixXcd dft2(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXcd& a = dft_matrix(static_cast<int>(m.rows()));
    const Eigen::MatrixXcd& b = dft_matrix(static_cast<int>(m.cols()));
    return a * m.cast<std::complex<double>>() * b;
}

Eigen::MatrixXd magnitude_of(const Eigen::MatrixXcd& spectrum) {
    return (spectrum.real().array().square() + spectrum.imag().array().square() +
            kMagnitudeEps)
        .sqrt()
        .matrix();
}

Eigen::MatrixXd center_shift(const Eigen::MatrixXd& raw) {
    const int h = static_cast<int>(raw.rows());
    const int w = static_cast<int>(raw.cols());
    Eigen::MatrixXd centered(h, w);
    for (int k = 0; k < h; ++k)
        for (int l = 0; l < w; ++l)
            centered((k + h / 2) % h, (l + w / 2) % w) = raw(k, l);
    return centered;
}

void require_embedding_shape(const Eigen::MatrixXd& m) {
    if (m.rows() != kEmbeddingRows || m.cols() != kEmbeddingCols)
        throw Error("expected a 40x120 matrix, got " + std::to_string(m.rows()) +
                    "x" + std::to_string(m.cols()));
}

}  // namespace

Eigen::MatrixXd dft2_magnitude(const Eigen::MatrixXd& m) {
    return center_shift(magnitude_of(dft2(m)));
}

Eigen::MatrixXd lowpass_crop(const Eigen::MatrixXd& centered) {
    require_embedding_shape(centered);
    return centered.block(kCropRow, kCropCol, kSignatureSize, kSignatureSize);
}

Eigen::MatrixXd signature_of(const Eigen::MatrixXd& embedding) {
    SignatureCache cache;
    return signature_of(embedding, cache);
}

Eigen::MatrixXd signature_of(const Eigen::MatrixXd& embedding, SignatureCache& cache) {
    require_embedding_shape(embedding);
    if (embedding.isZero(0.0)) {
        cache = SignatureCache{};
        cache.zero_input = true;
        cache.signature = Eigen::MatrixXd::Zero(kSignatureSize, kSignatureSize);
        return cache.signature;
    }
    cache.zero_input = false;
    cache.spectrum = dft2(embedding);
    cache.magnitude = magnitude_of(cache.spectrum);
    const Eigen::MatrixXd crop = lowpass_crop(center_shift(cache.magnitude));
    cache.norm = crop.norm();
    cache.signature = crop / cache.norm;
    return cache.signature;
}

Eigen::MatrixXd signature_backward(const SignatureCache& cache,
                                   const Eigen::MatrixXd& grad_signature) {
    if (cache.zero_input)
        return Eigen::MatrixXd::Zero(kEmbeddingRows, kEmbeddingCols);

    // Normalization: d(crop/norm) pulls back to (g - (sig . g) sig) / norm.
    const double dot = (cache.signature.array() * grad_signature.array()).sum();
    const Eigen::MatrixXd grad_crop =
        (grad_signature - dot * cache.signature) / cache.norm;

    // Undo crop and center shift back onto the raw spectrum layout.
    Eigen::MatrixXd grad_mag = Eigen::MatrixXd::Zero(kEmbeddingRows, kEmbeddingCols);
    for (int r = 0; r < kSignatureSize; ++r)
        for (int c = 0; c < kSignatureSize; ++c) {
            const int k = (kCropRow + r + kEmbeddingRows / 2) % kEmbeddingRows;
            const int l = (kCropCol + c + kEmbeddingCols / 2) % kEmbeddingCols;
            grad_mag(k, l) = grad_crop(r, c);
        }

    // Magnitude sqrt(re^2 + im^2 + eps): dL/dX = g * X / |X|.
    const Eigen::MatrixXcd w =
        (grad_mag.array() / cache.magnitude.array()).matrix().cast<std::complex<double>>()
            .cwiseProduct(cache.spectrum);

    // Linear DFT X = A x B with symmetric A, B: dL/dx = Re(A conj(W) B).
    const Eigen::MatrixXcd& a = dft_matrix(kEmbeddingRows);
    const Eigen::MatrixXcd& b = dft_matrix(kEmbeddingCols);
    return (a * w.conjugate() * b).real();
}

double signature_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error("signature shapes differ");
    return (a - b).norm();
}

}  // namespace placerec
