#include "gridmesh/comms.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace gridmesh;

TEST_CASE("throughput is linear in the vehicle count") {
    REQUIRE(throughput_from_traffic(0.0, 5.0) == 0.0);
    REQUIRE(throughput_from_traffic(100.0, 5.0) == Catch::Approx(500.0));
    REQUIRE(throughput_from_traffic(200.0, 5.0) ==
            Catch::Approx(2.0 * throughput_from_traffic(100.0, 5.0)));
}

TEST_CASE("packet loss is zero at and below the threshold") {
    REQUIRE(packet_loss(80.0, 0.03, 80.0) == 0.0);
    REQUIRE(packet_loss(40.0, 0.03, 80.0) == 0.0);
    REQUIRE(packet_loss(480.0, 0.03, 80.0) == Catch::Approx(0.6));
}

TEST_CASE("packet loss is clamped to total loss") {
    REQUIRE(packet_loss(1e9, 0.03, 80.0) == 1.0);
}

TEST_CASE("packet loss is continuous and nondecreasing in throughput") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> q(0.0, 2000.0);
    for (int i = 0; i < 300; ++i) {
        double a = q(rng), b = q(rng);
        if (a > b) std::swap(a, b);
        REQUIRE(packet_loss(a, 0.035, 350.0) <= packet_loss(b, 0.035, 350.0));
    }
    // continuity at the threshold
    REQUIRE(packet_loss(350.0 + 1e-12, 0.035, 350.0) < 1e-6);
}

TEST_CASE("delay factor is one plus the loss rate") {
    REQUIRE(delay_factor(0.0) == 1.0);
    REQUIRE(delay_factor(0.6) == Catch::Approx(1.6));
    REQUIRE(delay_factor(1.0) == 2.0);
}

TEST_CASE("more vehicles never decrease the delay factor") {
    std::mt19937 rng(32);
    std::uniform_real_distribution<double> n(0.0, 400.0);
    for (int i = 0; i < 300; ++i) {
        double a = n(rng), b = n(rng);
        if (a > b) std::swap(a, b);
        double fa = delay_factor(packet_loss(throughput_from_traffic(a, 8.0), 0.03, 80.0));
        double fb = delay_factor(packet_loss(throughput_from_traffic(b, 8.0), 0.03, 80.0));
        REQUIRE(fa <= fb);
        REQUIRE(fa >= 1.0);
    }
}
