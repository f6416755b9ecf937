#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracle_maps.hpp"
#include "sagaqnet/oracle.hpp"

#include <random>

using namespace sqn;
using oracle::Mat;
using oracle::Vec;

TEST_CASE("graph_to_state") {
    GraphState single;
    single.add_vertex({"a", 0});
    auto plus = oracle::graph_to_state(single);
    CHECK(std::abs(plus[0] - std::complex<double>(1 / std::sqrt(2.0))) < 1e-12);
    CHECK(std::abs(plus[1] - std::complex<double>(1 / std::sqrt(2.0))) < 1e-12);

    auto k2 = bell_graph({"a", 0}, {"b", 0});
    auto psi = oracle::graph_to_state(k2);
    CHECK(std::abs(psi[0] - 0.5) < 1e-12);
    CHECK(std::abs(psi[1] - 0.5) < 1e-12);
    CHECK(std::abs(psi[2] - 0.5) < 1e-12);
    CHECK(std::abs(psi[3] + 0.5) < 1e-12);

    SUBCASE("path of 3 stabilizers") {
        GraphState path;
        for (auto n : {"a", "b", "c"}) path.add_vertex({n, 0});
        path.add_edge({"a", 0}, {"b", 0});
        path.add_edge({"b", 0}, {"c", 0});
        auto s = oracle::graph_to_state(path);
        // K_v = X_v prod_{w~v} Z_w must stabilize the state
        auto stab = [&](int v, std::vector<int> nbs) {
            Mat k = oracle::embed1(3, v, oracle::pauli_x());
            for (int w : nbs) k = oracle::embed1(3, w, oracle::pauli_z()) * k;
            Vec sv = k * s;
            REQUIRE((sv - s).norm() < 1e-9);
        };
        stab(0, {1});
        stab(1, {0, 2});
        stab(2, {1});
    }
}

TEST_CASE("depolarizing channel") {
    std::mt19937 rng(23);
    auto bd = testing::random_bell_diag(rng);
    Mat rho = oracle::bell_diag_density(bd);
    CHECK((oracle::depolarize_qubit(rho, 0, 0.0, 2) - rho).norm() < 1e-13);

    Mat full = oracle::depolarize_qubit(rho, 0, 1.0, 2);
    Mat reduced = oracle::partial_trace_keep(full, {0}, 2);
    CHECK((reduced - Mat::Identity(2, 2) * 0.5).norm() < 1e-12);
    CHECK(std::abs(full.trace().real() - 1.0) < 1e-12);

    SUBCASE("composition semigroup") {
        Mat two = oracle::depolarize_qubit(oracle::depolarize_qubit(rho, 0, 0.3, 2), 0, 0.5, 2);
        Mat one = oracle::depolarize_qubit(rho, 0, 0.3 + 0.5 - 0.15, 2);
        CHECK((two - one).norm() < 1e-12);
    }
}

TEST_CASE("bell_project") {
    SUBCASE("perfect swap") {
        BellDiag perfect;
        Mat rho = Eigen::kroneckerProduct(oracle::bell_diag_density(perfect),
                                          oracle::bell_diag_density(perfect)).eval();
        auto bp = oracle::bell_project(rho, 1, 2, 0);
        CHECK(bp.probability == doctest::Approx(0.25).epsilon(1e-12));
        Mat outer = oracle::partial_trace_keep(bp.post, {0, 3}, 4);
        auto d = oracle::bell_diag_of(outer);
        CHECK(d.p[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("product state |00>") {
        Vec v = Vec::Zero(4);
        v[0] = 1.0;
        Mat rho = oracle::density_of(v);
        double probs[4];
        for (int k = 0; k < 4; ++k) probs[k] = oracle::bell_project(rho, 0, 1, k).probability;
        CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(probs[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(probs[2] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(probs[3] == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("outcome probabilities sum to one") {
        std::mt19937 rng(29);
        std::normal_distribution<double> g;
        Vec v(16);
        for (int i = 0; i < 16; ++i) v[i] = std::complex<double>(g(rng), g(rng));
        v.normalize();
        Mat rho = oracle::density_of(v);
        double total = 0;
        for (int k = 0; k < 4; ++k) total += oracle::bell_project(rho, 1, 2, k).probability;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("bell_diag_of") {
    BellDiag perfect;
    CHECK(oracle::bell_diag_of(oracle::bell_diag_density(perfect)).p.isApprox(perfect.p));
    BellDiag mm{Eigen::Vector4d::Constant(0.25)};
    CHECK(oracle::bell_diag_of(Mat::Identity(4, 4) * 0.25).p.isApprox(mm.p));
    auto w = werner(0.83);
    auto round = oracle::bell_diag_of(oracle::bell_diag_density(w));
    CHECK((round.p - w.p).cwiseAbs().maxCoeff() < 1e-12);
}
