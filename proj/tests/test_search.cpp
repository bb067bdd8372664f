#include <doctest.h>

#include "cmcforge/search.hpp"

using namespace cmcforge;

TEST_CASE("simplex minimizes a shifted quadratic") {
    auto f = [](const std::vector<double>& x) {
        double a = x[0] - 2.0, b = x[1] + 1.0;
        return a * a + 3.0 * b * b;
    };
    NelderMeadResult r = nelder_mead(f, {0.0, 0.0}, {0.5, 0.5});
    CHECK(r.by_tolerance);
    CHECK(std::abs(r.x[0] - 2.0) < 1e-7);
    CHECK(std::abs(r.x[1] + 1.0) < 1e-7);
    CHECK(r.fmin < 1e-13);
}

TEST_CASE("simplex tolerates infinite regions") {
    auto f = [](const std::vector<double>& x) {
        if (x[0] < 0.0) return std::numeric_limits<double>::infinity();
        double a = x[0] - 0.5;
        return a * a + x[1] * x[1];
    };
    NelderMeadResult r = nelder_mead(f, {2.0, 1.0}, {0.4, 0.4});
    CHECK(std::abs(r.x[0] - 0.5) < 1e-6);
    CHECK(std::abs(r.x[1]) < 1e-6);
}

TEST_CASE("evaluation budget is respected") {
    auto f = [](const std::vector<double>& x) { return x[0] * x[0]; };
    NelderMeadOptions opts;
    opts.max_evals = 20;
    NelderMeadResult r = nelder_mead(f, {5.0}, {1.0}, opts);
    CHECK(r.evals <= 20);
    CHECK(!r.by_tolerance);
}

TEST_CASE("layout round-trips every symmetry combination") {
    for (bool rect : {false, true})
        for (bool even : {false, true})
            for (bool with_l0 : {false, true}) {
                VariableLayout lay;
                lay.rectangular = rect;
                lay.even_lambda = even;
                lay.N = 4;
                lay.with_lambda0 = with_l0;

                AccessorySeries s = AccessorySeries::zero(4);
                for (int k = 0; k <= 4; ++k) {
                    if (even && k % 2 == 1) continue;
                    s.a[static_cast<size_t>(k)] = rect ? cplx(0.1 * k - 0.2) : cplx(0.1 * k, -0.05 * k);
                    s.c[static_cast<size_t>(k)] = rect ? cplx(0.3 - 0.07 * k) : cplx(-0.02 * k, 0.3);
                }
                std::optional<cplx> l0;
                if (with_l0) l0 = cplx(0.25, -0.4);

                std::vector<double> x = lay.pack(s, l0);
                CHECK(x.size() == lay.dim());

                AccessorySeries back = AccessorySeries::zero(4);
                std::optional<cplx> l0_back;
                lay.unpack(x, back, l0_back);
                for (int k = 0; k <= 4; ++k) {
                    CHECK(std::abs(back.a[static_cast<size_t>(k)] - s.a[static_cast<size_t>(k)]) == 0.0);
                    CHECK(std::abs(back.c[static_cast<size_t>(k)] - s.c[static_cast<size_t>(k)]) == 0.0);
                }
                if (with_l0) {
                    REQUIRE(l0_back.has_value());
                    CHECK(std::abs(*l0_back - *l0) == 0.0);
                } else {
                    CHECK(!l0_back.has_value());
                }
            }
}

TEST_CASE("layout dimensions reflect the constraints") {
    VariableLayout lay;
    lay.N = 4;
    CHECK(lay.dim() == 20); // complex a_0..a_4, c_0..c_4
    lay.rectangular = true;
    CHECK(lay.dim() == 10);
    lay.even_lambda = true;
    CHECK(lay.dim() == 6); // k = 0, 2, 4 for each series
    lay.with_lambda0 = true;
    CHECK(lay.dim() == 8);
}
