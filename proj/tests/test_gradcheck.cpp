#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck_suites.hpp"

// Fast subset; the acceptance suite runs the full 20-instance sweeps.
namespace {
constexpr int kN = 6;
constexpr double kTol = 1e-4;
}  // namespace

TEST_CASE("dense gradients match finite differences") { CHECK(gradcheck::dense_suite(kN) < kTol); }
TEST_CASE("conv2d gradients match finite differences") { CHECK(gradcheck::conv2d_suite(kN) < kTol); }
TEST_CASE("maxpool2 gradients match finite differences") {
    CHECK(gradcheck::maxpool2_suite(kN) < kTol);
}
TEST_CASE("relu gradients match finite differences") { CHECK(gradcheck::relu_suite(kN) < kTol); }
TEST_CASE("sigmoid gradients match finite differences") {
    CHECK(gradcheck::sigmoid_suite(kN) < kTol);
}
TEST_CASE("concat gradients match finite differences") { CHECK(gradcheck::concat_suite(kN) < kTol); }
TEST_CASE("mse gradients match finite differences") { CHECK(gradcheck::mse_suite(kN) < kTol); }
TEST_CASE("composed dense-sigmoid-mse gradients match finite differences") {
    CHECK(gradcheck::composite_suite(kN) < kTol);
}
TEST_CASE("desk case3 network gradients match finite differences") {
    CHECK(gradcheck::case3_network_suite(3) < kTol);
}
