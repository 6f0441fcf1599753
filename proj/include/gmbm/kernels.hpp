#pragma once

// Data-parallel inner loops. Each OpenMP kernel has a serial twin in
// `kernels::serial` computing every output entry with the same operation
// order, so the two agree bit-for-bit and results do not depend on the
// thread count. Tests compare the pairs; the benchmark times them.

#include <cstddef>
#include <cstdint>
#include <span>

namespace gmbm {
class RngStream;
}

namespace gmbm::kernels {

/// Words of 64 bits needed for one bit-packed row of length n.
inline std::size_t row_words(std::size_t n) { return (n + 63) / 64; }

/// Thresholded Gram matrix of the rows of `points` (n x d, row-major):
/// bit (i, j) of `bits` is set iff i != j and <p_i, p_j> >= tau. `bits`
/// holds n rows of row_words(n) words and is overwritten. The output is
/// symmetric by construction: only i < j is evaluated, then mirrored.
void threshold_gram(std::span<const double> points, std::size_t n, std::size_t d, double tau,
                    std::span<std::uint64_t> bits);

/// y = A x for a 0/1 matrix in compressed-row form (sorted column indices).
void csr_matvec(std::span<const std::int64_t> offsets, std::span<const std::int32_t> columns,
                std::span<const double> x, std::span<double> y);

/// Dot product with a fixed chunked summation order.
double dot(std::span<const double> x, std::span<const double> y);

/// Samples of <u, u'> for independent draws u, u' of the two-component
/// mixture 1/2 N(-mu e1, I/d) + 1/2 N(mu e1, I/d). Block b of `out` draws
/// from stream.child(b), so output is independent of scheduling.
void mixture_inner_products(int d, double mu, const RngStream& stream, std::span<double> out);

inline constexpr std::size_t kSampleBlock = 1 << 15;
inline constexpr std::size_t kDotChunk = 1 << 12;

namespace serial {

void threshold_gram(std::span<const double> points, std::size_t n, std::size_t d, double tau,
                    std::span<std::uint64_t> bits);
void csr_matvec(std::span<const std::int64_t> offsets, std::span<const std::int32_t> columns,
                std::span<const double> x, std::span<double> y);
double dot(std::span<const double> x, std::span<const double> y);
void mixture_inner_products(int d, double mu, const RngStream& stream, std::span<double> out);

}  // namespace serial

}  // namespace gmbm::kernels
