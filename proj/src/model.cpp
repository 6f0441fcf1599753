#include "gmbm/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "gmbm/error.hpp"
#include "gmbm/kernels.hpp"

namespace gmbm {

void ModelParams::validate() const {
    if (n < 2) throw InvalidParameter("n must be at least 2");
    if (n > kMaxVertices)
        throw CapacityError("n = " + std::to_string(n) + " exceeds the dense adjacency limit " +
                            std::to_string(kMaxVertices));
    if (d < 2) throw InvalidParameter("d must be at least 2");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidParameter("mu must be a finite non-negative number");
    if (p && !(*p > 0.0 && *p < 0.5)) throw InvalidParameter("p must lie in (0, 1/2)");
    if (source == ThresholdSource::edge_probability && !p)
        throw InvalidParameter("edge probability p is authoritative but missing");
    if (source == ThresholdSource::threshold && !tau) throw InvalidParameter("threshold tau is authoritative but missing");
    if (tau && !std::isfinite(*tau)) throw InvalidParameter("tau must be finite");
}

LatentEmbedding decompose(RowMatrix U, std::vector<int> labels) {
    const auto n = U.rows();
    const auto d = U.cols();
    if (d < 2) throw InvalidParameter("latent dimension must be at least 2 for the spherical decomposition");
    if (static_cast<Eigen::Index>(labels.size()) != n) throw InvalidInput("label count does not match latent rows");

    LatentEmbedding out;
    out.d_tilde = static_cast<int>(d - 1);
    out.a = U.col(0);
    out.ell.resize(n);
    out.V = RowMatrix::Zero(n, d - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto tail = U.row(i).tail(d - 1);
        const double norm = tail.norm();
        out.ell(i) = norm;
        if (norm > 0.0) out.V.row(i) = tail / norm;
    }
    out.L = out.ell.array() - 1.0;
    out.U = std::move(U);
    out.labels = std::move(labels);
    return out;
}

BitMatrix::BitMatrix(std::size_t n) : n_(n), words_(kernels::row_words(n)), bits_(n * words_, 0) {}

void BitMatrix::set_symmetric(std::size_t i, std::size_t j) {
    bits_[i * words_ + j / 64] |= std::uint64_t{1} << (j % 64);
    bits_[j * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
}

Eigen::MatrixXd GraphSample::to_dense() const {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (auto j : neighbors_of(i)) A(static_cast<Eigen::Index>(i), j) = 1.0;
    return A;
}

std::vector<std::pair<std::int32_t, std::int32_t>> GraphSample::edges() const {
    std::vector<std::pair<std::int32_t, std::int32_t>> out;
    out.reserve(edge_count);
    for (std::size_t i = 0; i < n; ++i)
        for (auto j : neighbors_of(i))
            if (static_cast<std::size_t>(j) > i) out.emplace_back(static_cast<std::int32_t>(i), j);
    return out;
}

GraphSample finalize_graph(BitMatrix adjacency, ModelParams params) {
    GraphSample g;
    g.n = adjacency.size();
    g.offsets.assign(g.n + 1, 0);
    for (std::size_t i = 0; i < g.n; ++i) {
        std::int64_t degree = 0;
        for (auto word : adjacency.row(i)) degree += std::popcount(word);
        g.offsets[i + 1] = g.offsets[i] + degree;
    }
    g.neighbors.resize(static_cast<std::size_t>(g.offsets[g.n]));
    for (std::size_t i = 0; i < g.n; ++i) {
        auto cursor = static_cast<std::size_t>(g.offsets[i]);
        const auto row = adjacency.row(i);
        for (std::size_t w = 0; w < row.size(); ++w) {
            std::uint64_t word = row[w];
            while (word) {
                const int bit = std::countr_zero(word);
                g.neighbors[cursor++] = static_cast<std::int32_t>(w * 64 + static_cast<std::size_t>(bit));
                word &= word - 1;
            }
        }
    }
    g.edge_count = static_cast<std::uint64_t>(g.offsets[g.n]) / 2;
    g.adjacency = std::move(adjacency);
    params.n = g.n;
    g.params = params;
    return g;
}

GraphSample graph_from_edges(std::size_t n, std::span<const std::pair<std::int32_t, std::int32_t>> edges,
                             ModelParams params) {
    if (n > kMaxVertices) throw CapacityError("graph exceeds the dense adjacency limit");
    BitMatrix bits(n);
    for (auto [i, j] : edges) {
        if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= n || static_cast<std::size_t>(j) >= n)
            throw InvalidInput("edge endpoint out of range");
        if (i == j) throw InvalidInput("self loops are not allowed");
        if (bits.test(static_cast<std::size_t>(i), static_cast<std::size_t>(j)))
            throw InvalidInput("duplicate edge");
        bits.set_symmetric(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
    return finalize_graph(std::move(bits), params);
}

LatentEmbedding sample_latents(const ModelParams& params, const RngStream& stream) {
    if (params.d < 2) throw InvalidParameter("d must be at least 2");
    if (params.n < 1) throw InvalidParameter("n must be positive");
    const auto n = static_cast<Eigen::Index>(params.n);
    const int d = params.d;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));

    RowMatrix U(n, d);
    std::vector<int> labels(params.n);
    for (Eigen::Index i = 0; i < n; ++i) {
        RngStream rng = stream.child(static_cast<std::uint64_t>(i));
        const int x = rng.sign();
        labels[static_cast<std::size_t>(i)] = x;
        for (int k = 0; k < d; ++k) U(i, k) = rng.normal() * scale;
        U(i, 0) += x * params.mu;
    }
    return decompose(std::move(U), std::move(labels));
}

GraphSample connect_graph(const LatentEmbedding& latents, double tau) {
    const std::size_t n = latents.n();
    if (n > kMaxVertices) throw CapacityError("graph exceeds the dense adjacency limit");
    BitMatrix bits(n);
    const auto d = static_cast<std::size_t>(latents.d());
    kernels::threshold_gram({latents.U.data(), n * d}, n, d, tau, bits.data());
    ModelParams params;
    params.n = n;
    params.d = latents.d();
    params.tau = tau;
    params.source = ThresholdSource::threshold;
    return finalize_graph(std::move(bits), params);
}

Eigen::MatrixXd local_thresholds(const LatentEmbedding& latents, double tau) {
    const auto n = static_cast<Eigen::Index>(latents.n());
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(latents.ell(i) > 0.0)) throw DegenerateLatent("latent " + std::to_string(i) + " has zero tail norm");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != j) out(i, j) = (tau - latents.a(i) * latents.a(j)) / (latents.ell(i) * latents.ell(j));
    return out;
}

GraphDraw draw_graph(const ModelParams& params, const RngStream& stream) {
    params.validate();
    if (!params.tau) throw InvalidParameter("draw_graph needs a resolved threshold tau");
    GraphDraw out;
    out.latents = sample_latents(params, stream.child("latents"));
    out.graph = connect_graph(out.latents, *params.tau);
    out.graph.params = params;
    return out;
}

}  // namespace gmbm
