#include "doctest.h"

#include <filesystem>
#include <limits>
#include <sstream>

#include "gmbm/error.hpp"
#include "gmbm/io.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

using namespace gmbm;

namespace {

GraphDraw sample_draw() {
    ModelParams P;
    P.n = 120;
    P.d = 5;
    P.mu = 0.3;
    P.p = 0.2;
    P.tau = 0.1234567890123;
    P.seed = 99;
    return draw_graph(P, RngStream(99));
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::numeric_limits<double>::max()}) {
        const auto s = format_double(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(format_double(0.25) == "0.25");
}

TEST_CASE("graph round trip") {
    const auto draw = sample_draw();
    std::stringstream buf;
    write_graph(buf, draw.graph);
    const auto G = read_graph(buf);
    CHECK(G.n == draw.graph.n);
    CHECK(G.adjacency == draw.graph.adjacency);
    CHECK(G.edge_count == draw.graph.edge_count);
    CHECK(G.params.d == 5);
    CHECK(G.params.mu == 0.3);
    CHECK(*G.params.tau == 0.1234567890123);
    CHECK(*G.params.p == 0.2);
    CHECK(G.params.seed == 99);
    CHECK(G.params.source == ThresholdSource::edge_probability);
}

TEST_CASE("graph header carries version and generator") {
    std::stringstream buf;
    write_graph(buf, sample_draw().graph);
    const auto text = buf.str();
    CHECK(text.find("# version = " + std::string(kToolVersion)) != std::string::npos);
    CHECK(text.find("# rng = philox4x32-10/1") != std::string::npos);
}

TEST_CASE("malformed graph files") {
    auto read = [](const std::string& s) {
        std::istringstream in(s);
        return read_graph(in);
    };
    CHECK_THROWS_AS(read("0 1\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n1 0\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n0 2\n0 1\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n0 1\n0 1\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n0 3\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n0 x\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 3\n# edges = 2\n0 1\n"), InvalidInput);
    CHECK_THROWS_AS(read("# n = 100000\n"), CapacityError);
    CHECK(read("# n = 3\n\n0 1\n1 2\n").edge_count == 2);
}

TEST_CASE("latent round trip is exact") {
    const auto draw = sample_draw();
    std::stringstream buf;
    write_latents(buf, draw.latents);
    const auto L = read_latents(buf);
    CHECK(L.U == draw.latents.U);
    CHECK(L.labels == draw.latents.labels);
    CHECK(L.ell == draw.latents.ell);
}

TEST_CASE("embedding round trip is exact") {
    RowMatrix M(3, 2);
    M << 0.1, -2.0 / 3.0, 1e-20, 5.0, -0.0, 7.25;
    std::stringstream buf;
    write_embedding(buf, M);
    CHECK(buf.str().rfind("vertex,x1,x2\n", 0) == 0);
    CHECK(read_embedding(buf) == M);
    std::istringstream bad("vertex,x1\n1,0.5\n");
    CHECK_THROWS_AS(read_embedding(bad), InvalidInput);
}

TEST_CASE("bad latent files") {
    std::istringstream label("label,u1,u2\n2,0.1,0.2\n");
    CHECK_THROWS_AS(read_latents(label), InvalidInput);
    std::istringstream width("label,u1,u2\n1,0.1\n");
    CHECK_THROWS_AS(read_latents(width), InvalidInput);
}

TEST_CASE("file wrappers") {
    const auto dir = std::filesystem::temp_directory_path() / "gmbm_io_test";
    std::filesystem::create_directories(dir);
    const auto draw = sample_draw();
    save_graph(dir / "g.txt", draw.graph);
    save_latents(dir / "l.csv", draw.latents);
    CHECK(load_graph(dir / "g.txt").adjacency == draw.graph.adjacency);
    CHECK(load_latents(dir / "l.csv").U == draw.latents.U);
    CHECK_THROWS_AS(load_graph(dir / "missing.txt"), InvalidInput);
    std::filesystem::remove_all(dir);
}

}
