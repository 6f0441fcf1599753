#include "doctest.h"

#include "gmbm/calibrate.hpp"
#include "gmbm/eigensolver.hpp"
#include "gmbm/model.hpp"
#include "gmbm/spectral.hpp"

using namespace gmbm;

TEST_SUITE("regime") {

TEST_CASE("spectral gap recovers the dimension at n = 4000, d = 32") {
    ModelParams P;
    P.n = 4000;
    P.d = 32;
    P.mu = 0.0;
    P.p = 0.2;
    const RngStream root(32);
    P = resolve_threshold(P, root);
    const int i_max = default_gap_range(P.d, P.n);
    int hits = 0;
    for (int s = 0; s < 10; ++s) {
        const auto G = draw_graph(P, root.child("graph").child(s)).graph;
        const auto dec = eigentop(G, static_cast<std::size_t>(i_max) + 2);
        const int d_est = detect_dimension({dec.eigenvalues.data(), static_cast<std::size_t>(dec.eigenvalues.size())}, i_max);
        int widest = 1;
        for (int i = 2; i <= i_max; ++i)
            if (dec.eigenvalues(i) - dec.eigenvalues(i + 1) > dec.eigenvalues(widest) - dec.eigenvalues(widest + 1)) widest = i;
        MESSAGE("seed " << s << ": d_est = " << d_est << ", widest gap at " << widest << ", eta_1 - eta_2 = "
                        << dec.eigenvalues(1) - dec.eigenvalues(2));
        hits += d_est == 32;
    }
    CHECK(hits >= 8);
}

}
