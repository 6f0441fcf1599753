#include "gmbm/io.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

#include "gmbm/error.hpp"
#include "gmbm/rng.hpp"

namespace gmbm {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double parse_double(std::string_view text, std::string_view what) {
    const std::string s = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw InvalidInput("cannot parse " + std::string(what) + " from '" + s + "'");
    return value;
}

template <class Int>
Int parse_int(std::string_view text, std::string_view what) {
    const std::string s = trim(text);
    Int value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw InvalidInput("cannot parse " + std::string(what) + " from '" + s + "'");
    return value;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Rows of a numeric CSV after its header; the header is checked for width only.
std::vector<std::vector<double>> read_numeric_csv(std::istream& in, std::string_view what) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidInput(std::string(what) + " file is empty");
    const auto width = split_commas(line).size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split_commas(line);
        if (fields.size() != width)
            throw InvalidInput(std::string(what) + " row " + std::to_string(rows.size() + 1) + " has " +
                               std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
        std::vector<double> row(fields.size());
        for (std::size_t k = 0; k < fields.size(); ++k) row[k] = parse_double(fields[k], what);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error("write to " + path.string() + " failed");
}

}  // namespace

std::string format_double(double value) {
    char buffer[32];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buffer, ptr);
}

void write_graph(std::ostream& out, const GraphSample& G) {
    const auto& P = G.params;
    out << "# gmbm graph\n";
    out << "# n = " << G.n << '\n';
    out << "# d = " << P.d << '\n';
    out << "# mu = " << format_double(P.mu) << '\n';
    if (P.p) out << "# p = " << format_double(*P.p) << '\n';
    if (P.tau) out << "# tau = " << format_double(*P.tau) << '\n';
    out << "# seed = " << P.seed << '\n';
    out << "# source = " << (P.source == ThresholdSource::edge_probability ? "p" : "tau") << '\n';
    out << "# edges = " << G.edge_count << '\n';
    out << "# version = " << kToolVersion << '\n';
    out << "# rng = " << kRngName << '/' << kRngVersion << '\n';
    for (const auto& [i, j] : G.edges()) out << i << ' ' << j << '\n';
}

GraphSample read_graph(std::istream& in) {
    std::map<std::string, std::string> header;
    std::vector<std::pair<std::int32_t, std::int32_t>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty()) continue;
        if (text.front() == '#') {
            const auto eq = text.find('=');
            if (eq != std::string::npos) header[trim(text.substr(1, eq - 1))] = trim(text.substr(eq + 1));
            continue;
        }
        std::istringstream fields(text);
        long long i = -1, j = -1;
        std::string extra;
        if (!(fields >> i >> j) || (fields >> extra))
            throw InvalidInput("graph line " + std::to_string(line_no) + " is not 'i j'");
        if (i < 0 || j < 0 || i > INT32_MAX || j > INT32_MAX)
            throw InvalidInput("graph line " + std::to_string(line_no) + " has an invalid vertex index");
        if (i >= j) throw InvalidInput("graph line " + std::to_string(line_no) + " must satisfy i < j");
        if (!edges.empty() && std::pair<std::int32_t, std::int32_t>(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)) <= edges.back())
            throw InvalidInput("graph line " + std::to_string(line_no) + " is out of order or duplicated");
        edges.emplace_back(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
    }
    if (!header.count("n")) throw InvalidInput("graph header is missing n");

    ModelParams P;
    P.n = parse_int<std::size_t>(header["n"], "n");
    if (header.count("d")) P.d = parse_int<int>(header["d"], "d");
    if (header.count("mu")) P.mu = parse_double(header["mu"], "mu");
    if (header.count("p")) P.p = parse_double(header["p"], "p");
    if (header.count("tau")) P.tau = parse_double(header["tau"], "tau");
    if (header.count("seed")) P.seed = parse_int<std::uint64_t>(header["seed"], "seed");
    if (header.count("source")) P.source = header["source"] == "tau" ? ThresholdSource::threshold : ThresholdSource::edge_probability;
    if (P.n > kMaxVertices) throw CapacityError("graph has more vertices than the dense adjacency limit");

    auto G = graph_from_edges(P.n, edges, P);
    if (header.count("edges") && parse_int<std::uint64_t>(header["edges"], "edges") != G.edge_count)
        throw InvalidInput("edge count in header does not match the edge list");
    return G;
}

void write_latents(std::ostream& out, const LatentEmbedding& latents) {
    const auto d = latents.U.cols();
    out << "label";
    for (Eigen::Index k = 0; k < d; ++k) out << ",u" << k + 1;
    out << '\n';
    char buffer[40];
    for (Eigen::Index i = 0; i < latents.U.rows(); ++i) {
        out << latents.labels[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < d; ++k) {
            std::snprintf(buffer, sizeof buffer, ",%.17g", latents.U(i, k));
            out << buffer;
        }
        out << '\n';
    }
}

LatentEmbedding read_latents(std::istream& in) {
    const auto rows = read_numeric_csv(in, "latent");
    if (rows.empty()) throw InvalidInput("latent file has no rows");
    const auto d = static_cast<Eigen::Index>(rows.front().size()) - 1;
    if (d < 2) throw InvalidInput("latent file needs at least 2 coordinates");
    RowMatrix U(static_cast<Eigen::Index>(rows.size()), d);
    std::vector<int> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double label = rows[i][0];
        if (label != 1.0 && label != -1.0) throw InvalidInput("latent labels must be +1 or -1");
        labels[i] = static_cast<int>(label);
        for (Eigen::Index k = 0; k < d; ++k) U(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k + 1)];
    }
    return decompose(std::move(U), std::move(labels));
}

void write_embedding(std::ostream& out, const RowMatrix& U_hat) {
    out << "vertex";
    for (Eigen::Index k = 0; k < U_hat.cols(); ++k) out << ",x" << k + 1;
    out << '\n';
    char buffer[40];
    for (Eigen::Index i = 0; i < U_hat.rows(); ++i) {
        out << i;
        for (Eigen::Index k = 0; k < U_hat.cols(); ++k) {
            std::snprintf(buffer, sizeof buffer, ",%.17g", U_hat(i, k));
            out << buffer;
        }
        out << '\n';
    }
}

RowMatrix read_embedding(std::istream& in) {
    const auto rows = read_numeric_csv(in, "embedding");
    if (rows.empty()) throw InvalidInput("embedding file has no rows");
    const auto d = static_cast<Eigen::Index>(rows.front().size()) - 1;
    RowMatrix U(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i][0] != static_cast<double>(i)) throw InvalidInput("embedding rows must list vertices 0..n-1 in order");
        for (Eigen::Index k = 0; k < d; ++k) U(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k + 1)];
    }
    return U;
}

GraphSample load_graph(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_graph(in);
}

LatentEmbedding load_latents(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_latents(in);
}

RowMatrix load_embedding(const std::filesystem::path& path) {
    auto in = open_in(path);
    return read_embedding(in);
}

void save_graph(const std::filesystem::path& path, const GraphSample& G) {
    auto out = open_out(path);
    write_graph(out, G);
    check_written(out, path);
}

void save_latents(const std::filesystem::path& path, const LatentEmbedding& latents) {
    auto out = open_out(path);
    write_latents(out, latents);
    check_written(out, path);
}

void save_embedding(const std::filesystem::path& path, const RowMatrix& U_hat) {
    auto out = open_out(path);
    write_embedding(out, U_hat);
    check_written(out, path);
}

}  // namespace gmbm
