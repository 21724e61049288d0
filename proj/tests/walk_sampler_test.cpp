#include "hienet/walk_sampler.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace hienet;

namespace {

// A -> B, A -> C, B -> C with users A=0, B=1, C=2.
CascadeGraph triangle() {
    CascadeGraph g(0, 100);
    g.add_node(1, 1);
    g.add_edge(0, 1, 1);
    g.add_node(2, 2);
    g.add_edge(0, 2, 2);
    g.add_edge(1, 2, 2);
    return g;
}

CascadeGraph chain() {
    CascadeGraph g(0, 100);
    g.add_node(1, 1);
    g.add_edge(0, 1, 1);
    g.add_node(2, 2);
    g.add_edge(1, 2, 2);
    return g;
}

}  // namespace

TEST_CASE("start distribution matches degree smoothing by hand") {
    const auto p = start_distribution(triangle(), 0.8);
    REQUIRE(p.size() == 3);
    CHECK(p[0] == doctest::Approx(2.8 / 5.4).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.8 / 5.4).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(0.8 / 5.4).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.5185).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(0.3333).epsilon(1e-3));
    CHECK(p[2] == doctest::Approx(0.1481).epsilon(1e-3));
}

TEST_CASE("start distribution edge cases") {
    CHECK(start_distribution(CascadeGraph(5, 10), 0.8) == std::vector<double>{1.0});
    // Nodes with equal out-degree get equal mass.
    CascadeGraph g(0, 10);
    for (UserIndex u = 1; u <= 3; ++u) {
        g.add_node(u, u);
        g.add_edge(0, u, u);
    }
    const auto p = start_distribution(g, 0.3);
    CHECK(p[1] == doctest::Approx(p[2]));
    CHECK(p[2] == doctest::Approx(p[3]));
    CHECK_THROWS(start_distribution(CascadeGraph(), 0.8));
}

TEST_CASE("transition distribution") {
    const auto g = triangle();
    const auto p = transition_distribution(g, 0, 0.8);
    REQUIRE(p.size() == 2);
    CHECK(p[0] == doctest::Approx(1.8 / 2.6).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.8 / 2.6).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.6923).epsilon(1e-3));
    CHECK(transition_distribution(g, 1, 0.8) == std::vector<double>{1.0});
    CHECK(transition_distribution(g, 2, 0.8).empty());
    CHECK_THROWS_AS(transition_distribution(g, 99, 0.8), std::out_of_range);
}

TEST_CASE("huge smoothing approaches uniform") {
    const auto g = triangle();
    for (double v : start_distribution(g, 1e9)) CHECK(std::abs(v - 1.0 / 3.0) < 1e-6);
    for (double v : transition_distribution(g, 0, 1e9)) CHECK(std::abs(v - 0.5) < 1e-6);
}

TEST_CASE("walks on a single node are padded") {
    const auto batch = sample_walks(CascadeGraph(4, 10), 2, 3, 0.8, 1);
    REQUIRE(batch.walks.size() == 2);
    for (const auto& w : batch.walks) CHECK(w == std::vector<UserIndex>{4, kPad, kPad});
}

TEST_CASE("walks on a chain follow the unique path") {
    const auto batch = sample_walks(chain(), 200, 5, 0.8, 3);
    std::size_t from_root = 0;
    for (const auto& w : batch.walks) {
        REQUIRE(w.size() == 5);
        if (w[0] != 0) continue;
        ++from_root;
        CHECK(w == std::vector<UserIndex>{0, 1, 2, kPad, kPad});
    }
    CHECK(from_root > 0);
}

TEST_CASE("walks are deterministic per seed and follow edges") {
    const auto g = triangle();
    const auto a = sample_walks(g, 50, 4, 0.8, 11);
    const auto b = sample_walks(g, 50, 4, 0.8, 11);
    CHECK(a.walks == b.walks);
    CHECK(sample_walks(g, 50, 4, 0.8, 12).walks != a.walks);
    for (const auto& w : a.walks) {
        for (std::size_t i = 1; i < w.size(); ++i) {
            if (w[i] == kPad) {
                CHECK((i + 1 == w.size() || w[i + 1] == kPad));
                continue;
            }
            const auto& nbrs = g.out_neighbors(g.local_index(w[i - 1]));
            CHECK(std::find(nbrs.begin(), nbrs.end(), g.local_index(w[i])) != nbrs.end());
        }
    }
}

TEST_CASE("empirical start frequencies converge") {
    const auto g = triangle();
    const auto batch = sample_walks(g, 100000, 1, 0.8, 5);
    std::vector<double> freq(3, 0.0);
    for (const auto& w : batch.walks) freq[g.local_index(w[0])] += 1.0 / 100000.0;
    const auto p = start_distribution(g, 0.8);
    double tv = 0.0;
    for (int i = 0; i < 3; ++i) tv += 0.5 * std::abs(freq[i] - p[i]);
    CHECK(tv < 0.01);
}

TEST_CASE("walk formatting") {
    const auto batch = sample_walks(CascadeGraph(4, 10), 1, 3, 0.8, 1);
    CHECK(format_walks(batch) == "4 - -\n");
}
