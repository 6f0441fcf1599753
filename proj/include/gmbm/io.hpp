#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "gmbm/model.hpp"

namespace gmbm {

inline constexpr std::string_view kToolVersion = "0.1.0";

/// Shortest decimal form that reads back to the same double.
std::string format_double(double value);

/// Edge list: '#' header lines `key = value` (n, d, mu, p, tau, seed, source,
/// version, rng), then one `i j` line per edge, 0-based, i < j, sorted.
void write_graph(std::ostream& out, const GraphSample& G);
GraphSample read_graph(std::istream& in);

/// CSV with a header row; each row is the label followed by d coordinates.
void write_latents(std::ostream& out, const LatentEmbedding& latents);
LatentEmbedding read_latents(std::istream& in);

/// CSV with a header row; each row is the vertex id followed by the coordinates.
void write_embedding(std::ostream& out, const RowMatrix& U_hat);
RowMatrix read_embedding(std::istream& in);

GraphSample load_graph(const std::filesystem::path& path);
LatentEmbedding load_latents(const std::filesystem::path& path);
RowMatrix load_embedding(const std::filesystem::path& path);

void save_graph(const std::filesystem::path& path, const GraphSample& G);
void save_latents(const std::filesystem::path& path, const LatentEmbedding& latents);
void save_embedding(const std::filesystem::path& path, const RowMatrix& U_hat);

}  // namespace gmbm
