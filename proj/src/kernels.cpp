#include "gmbm/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <omp.h>

#include "gmbm/rng.hpp"

namespace gmbm::kernels {

namespace {

constexpr std::size_t kTile = 256;

inline void set_bit(std::span<std::uint64_t> bits, std::size_t words, std::size_t i, std::size_t j) {
    bits[i * words + j / 64] |= (std::uint64_t{1} << (j % 64));
}

inline bool get_bit(std::span<const std::uint64_t> bits, std::size_t words, std::size_t i, std::size_t j) {
    return (bits[i * words + j / 64] >> (j % 64)) & 1u;
}

// One mixture inner-product draw; shared by both variants so the arithmetic is identical.
inline double draw_pair(RngStream& rng, double mu, double inv_sqrt_d, double tail_dof) {
    const double a1 = rng.sign() * mu + rng.normal() * inv_sqrt_d;
    const double a2 = rng.sign() * mu + rng.normal() * inv_sqrt_d;
    // <w, w'> for w, w' ~ N(0, I_{d-1}/d) equals |w| times an independent N(0, 1/d).
    const double tail_norm = std::sqrt(rng.chi_square(tail_dof)) * inv_sqrt_d;
    return a1 * a2 + tail_norm * rng.normal() * inv_sqrt_d;
}

void fill_block(int d, double mu, const RngStream& stream, std::span<double> out, std::size_t block) {
    const std::size_t begin = block * kSampleBlock;
    const std::size_t end = std::min(out.size(), begin + kSampleBlock);
    RngStream rng = stream.child(static_cast<std::uint64_t>(block));
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
    const double tail_dof = static_cast<double>(d - 1);
    for (std::size_t s = begin; s < end; ++s) out[s] = draw_pair(rng, mu, inv_sqrt_d, tail_dof);
}

double chunk_dot(const double* x, const double* y, std::size_t len) {
    double acc = 0.0;
    for (std::size_t k = 0; k < len; ++k) acc += x[k] * y[k];
    return acc;
}

void mirror_lower(std::span<std::uint64_t> bits, std::size_t n, std::size_t words, bool parallel) {
#pragma omp parallel for schedule(static) if (parallel)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        for (std::size_t j = 0; j < i; ++j)
            if (get_bit(bits, words, j, i)) set_bit(bits, words, i, j);
    }
}

}  // namespace

void threshold_gram(std::span<const double> points, std::size_t n, std::size_t d, double tau,
                    std::span<std::uint64_t> bits) {
    const std::size_t words = row_words(n);
    std::fill(bits.begin(), bits.end(), 0);

    // Transposed copy: column j of `cols` is point j, so the inner update
    // vectorizes across j while each pair still sums k = 0..d-1 in order.
    std::vector<double> cols(d * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < d; ++k) cols[k * n + j] = points[j * d + k];

#pragma omp parallel
    {
        std::vector<double> acc(kTile);
#pragma omp for schedule(dynamic, 8)
        for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(n); ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            const double* row = points.data() + i * d;
            for (std::size_t j0 = i + 1; j0 < n; j0 += kTile) {
                const std::size_t len = std::min(kTile, n - j0);
                std::fill(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(len), 0.0);
                for (std::size_t k = 0; k < d; ++k) {
                    const double coeff = row[k];
                    const double* col = cols.data() + k * n + j0;
                    for (std::size_t t = 0; t < len; ++t) acc[t] += coeff * col[t];
                }
                for (std::size_t t = 0; t < len; ++t)
                    if (acc[t] >= tau) set_bit(bits, words, i, j0 + t);
            }
        }
    }
    mirror_lower(bits, n, words, true);
}

void csr_matvec(std::span<const std::int64_t> offsets, std::span<const std::int32_t> columns,
                std::span<const double> x, std::span<double> y) {
    const auto rows = static_cast<std::int64_t>(offsets.size()) - 1;
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (std::int64_t e = offsets[i]; e < offsets[i + 1]; ++e) acc += x[columns[e]];
        y[i] = acc;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    const std::size_t chunks = (n + kDotChunk - 1) / kDotChunk;
    if (chunks <= 1) return chunk_dot(x.data(), y.data(), n);
    std::vector<double> partial(chunks);
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::size_t begin = static_cast<std::size_t>(c) * kDotChunk;
        partial[c] = chunk_dot(x.data() + begin, y.data() + begin, std::min(kDotChunk, n - begin));
    }
    double total = 0.0;
    for (double part : partial) total += part;
    return total;
}

void mixture_inner_products(int d, double mu, const RngStream& stream, std::span<double> out) {
    const std::size_t blocks = (out.size() + kSampleBlock - 1) / kSampleBlock;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b)
        fill_block(d, mu, stream, out, static_cast<std::size_t>(b));
}

namespace serial {

void threshold_gram(std::span<const double> points, std::size_t n, std::size_t d, double tau,
                    std::span<std::uint64_t> bits) {
    const std::size_t words = row_words(n);
    std::fill(bits.begin(), bits.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) acc += points[i * d + k] * points[j * d + k];
            if (acc >= tau) set_bit(bits, words, i, j);
        }
    }
    mirror_lower(bits, n, words, false);
}

void csr_matvec(std::span<const std::int64_t> offsets, std::span<const std::int32_t> columns,
                std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
        double acc = 0.0;
        for (std::int64_t e = offsets[i]; e < offsets[i + 1]; ++e) acc += x[columns[e]];
        y[i] = acc;
    }
}

double dot(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n <= kDotChunk) return chunk_dot(x.data(), y.data(), n);
    double total = 0.0;
    for (std::size_t begin = 0; begin < n; begin += kDotChunk)
        total += chunk_dot(x.data() + begin, y.data() + begin, std::min(kDotChunk, n - begin));
    return total;
}

void mixture_inner_products(int d, double mu, const RngStream& stream, std::span<double> out) {
    const std::size_t blocks = (out.size() + kSampleBlock - 1) / kSampleBlock;
    for (std::size_t b = 0; b < blocks; ++b) fill_block(d, mu, stream, out, b);
}

}  // namespace serial

}  // namespace gmbm::kernels
