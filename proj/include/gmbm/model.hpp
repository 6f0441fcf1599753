#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gmbm/rng.hpp"

namespace gmbm {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Largest vertex count for the dense bit-packed adjacency.
inline constexpr std::size_t kMaxVertices = 16384;

/// Which of (p, tau) the user fixed; the other one is derived.
enum class ThresholdSource { edge_probability, threshold };

/// Full configuration of one model draw.
struct ModelParams {
    std::size_t n = 0;
    int d = 0;
    double mu = 0.0;
    std::optional<double> p;
    std::optional<double> tau;
    std::uint64_t seed = 0;
    ThresholdSource source = ThresholdSource::edge_probability;

    /// Throws InvalidParameter on n < 2, d < 2, mu < 0, p outside (0, 1/2) or
    /// when the authoritative value is missing; CapacityError above kMaxVertices.
    void validate() const;

    int d_tilde() const { return d - 1; }
};

/// Latent vectors U (row i is u_i) with labels and the decomposition
/// u_i = (a_i, ell_i v_i), |v_i| = 1.
struct LatentEmbedding {
    RowMatrix U;
    std::vector<int> labels;
    Eigen::VectorXd a;
    Eigen::VectorXd ell;
    Eigen::VectorXd L;  // ell - 1
    RowMatrix V;        // n x (d - 1); rows with ell = 0 are left zero
    int d_tilde = 0;

    std::size_t n() const { return static_cast<std::size_t>(U.rows()); }
    int d() const { return static_cast<int>(U.cols()); }
};

/// Fills a, ell, L, V from U. Requires d >= 2.
LatentEmbedding decompose(RowMatrix U, std::vector<int> labels);

/// Bit-packed symmetric 0/1 matrix with zero diagonal.
class BitMatrix {
public:
    BitMatrix() = default;
    explicit BitMatrix(std::size_t n);

    std::size_t size() const { return n_; }
    std::size_t words_per_row() const { return words_; }
    bool test(std::size_t i, std::size_t j) const { return (bits_[i * words_ + j / 64] >> (j % 64)) & 1u; }
    void set_symmetric(std::size_t i, std::size_t j);

    std::span<std::uint64_t> data() { return bits_; }
    std::span<const std::uint64_t> data() const { return bits_; }
    std::span<const std::uint64_t> row(std::size_t i) const { return {bits_.data() + i * words_, words_}; }

    friend bool operator==(const BitMatrix&, const BitMatrix&) = default;

private:
    std::size_t n_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
};

/// A sampled graph: adjacency bits, sorted neighbor lists in CSR form, and provenance.
struct GraphSample {
    std::size_t n = 0;
    BitMatrix adjacency;
    std::vector<std::int64_t> offsets;  // n + 1 entries
    std::vector<std::int32_t> neighbors;
    ModelParams params;
    std::uint64_t edge_count = 0;

    std::span<const std::int32_t> neighbors_of(std::size_t i) const {
        return {neighbors.data() + offsets[i], static_cast<std::size_t>(offsets[i + 1] - offsets[i])};
    }
    double edge_density() const {
        return 2.0 * static_cast<double>(edge_count) / (static_cast<double>(n) * static_cast<double>(n - 1));
    }
    /// ||A||_F for a 0/1 symmetric matrix.
    double frobenius_norm() const { return std::sqrt(2.0 * static_cast<double>(edge_count)); }
    Eigen::MatrixXd to_dense() const;
    /// Unordered edges (i < j) in lexicographic order.
    std::vector<std::pair<std::int32_t, std::int32_t>> edges() const;
};

/// Builds neighbor lists and edge count from filled adjacency bits.
GraphSample finalize_graph(BitMatrix adjacency, ModelParams params);

/// Graph from an explicit edge list; duplicate and self edges are rejected.
GraphSample graph_from_edges(std::size_t n, std::span<const std::pair<std::int32_t, std::int32_t>> edges,
                             ModelParams params = {});

/// Draws labels x_i uniformly from {+1, -1} and u_i = x_i mu e_1 + z_i with
/// z_i ~ N(0, I/d). Vertex i uses stream.child(i), so the result does not
/// depend on how vertices are scheduled.
LatentEmbedding sample_latents(const ModelParams& params, const RngStream& stream);

/// Edge (i, j) present iff <u_i, u_j> >= tau, i != j.
GraphSample connect_graph(const LatentEmbedding& latents, double tau);

/// tau^{ij} = (tau - a_i a_j) / (ell_i ell_j); the diagonal is left at zero.
Eigen::MatrixXd local_thresholds(const LatentEmbedding& latents, double tau);

struct GraphDraw {
    LatentEmbedding latents;
    GraphSample graph;
};

/// Latents from stream.child("latents") connected at params.tau, which must
/// be set. The graph carries `params` as provenance.
GraphDraw draw_graph(const ModelParams& params, const RngStream& stream);

}  // namespace gmbm
