#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "edgenet/cascade.hpp"
#include "edgenet/forward.hpp"
#include "checks.hpp"

using namespace edgenet;

void run_softmax_entropy_tests() {
  printf("=== softmax and entropy ===\n");

  {
    const auto p = softmax({0.0f, 0.0f});
    CHECK(p[0] == 0.5f && p[1] == 0.5f, "softmax of equal logits");

    const auto q = softmax({std::log(2.0f), 0.0f});
    CHECK_NEAR(q[0], 2.0 / 3.0, 1e-6, "softmax ln2 first entry");
    CHECK_NEAR(q[1], 1.0 / 3.0, 1e-6, "softmax ln2 second entry");

    // Max-shift keeps huge logits finite.
    const auto r = softmax({1000.0f, 999.0f});
    CHECK(std::isfinite(r[0]) && std::isfinite(r[1]), "softmax stays finite");
    CHECK_NEAR(r[0] + r[1], 1.0, 1e-6, "softmax sums to one");
    CHECK_NEAR(r[0] / r[1], std::exp(1.0), 1e-4, "softmax ratio preserved");

    const auto s = softmax_d({-1000.0, 0.0, -1000.0});
    CHECK_NEAR(s[1], 1.0, 1e-12, "softmax_d dominant logit");

    CHECK_THROWS_CODE(softmax({}), ErrorCode::EmptyInput);
    CHECK_THROWS_CODE(softmax({1.0f, std::nanf("")}), ErrorCode::NonFiniteInput);
    const float inf = std::numeric_limits<float>::infinity();
    CHECK_THROWS_CODE(softmax({inf, 0.0f}), ErrorCode::NonFiniteInput);
  }

  {
    CHECK(entropy_d({1.0, 0.0, 0.0, 0.0}) == 0.0, "one-hot entropy is zero");
    CHECK_NEAR(entropy_d({0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-12,
               "uniform-4 entropy is ln 4");
    CHECK_NEAR(entropy_d({0.5, 0.5}), 0.693147180559945, 1e-12,
               "coin entropy is ln 2");
    CHECK_NEAR(entropy({0.5f, 0.5f}), std::log(2.0), 1e-6, "float wrapper");

    // A sum within the 1e-5 tolerance may push raw entropy past ln n;
    // the clamp keeps the threshold grid endpoints exact.
    const double e = entropy_d({0.250002, 0.25, 0.25, 0.25});
    CHECK(e <= std::log(4.0), "entropy clamped to ln n");
    CHECK(entropy_d({0.9999999, 0.0000001}) >= 0.0, "entropy clamped at zero");

    CHECK_THROWS_CODE(entropy_d({}), ErrorCode::EmptyInput);
    CHECK_THROWS_CODE(entropy_d({0.7, -0.1, 0.4}), ErrorCode::InvalidDistribution);
    CHECK_THROWS_CODE(entropy_d({0.5, 0.3}), ErrorCode::InvalidDistribution);
    CHECK_THROWS_CODE(entropy_d({0.5, std::nan("")}),
                      ErrorCode::InvalidDistribution);
  }

  printf("softmax and entropy: ok\n");
}
