#include <doctest.h>

#include <cmath>

#include "harmoniums/errors.hpp"
#include "harmoniums/special.hpp"

using namespace harmoniums;

TEST_CASE("log Bessel I0 against high-precision reference") {
    // Reference values computed with 30-digit arbitrary-precision arithmetic.
    CHECK(log_bessel_i0(0.1) == doctest::Approx(0.0024984392338762437).epsilon(1e-12));
    CHECK(log_bessel_i0(1.0) == doctest::Approx(0.23591435850717865).epsilon(1e-12));
    CHECK(log_bessel_i0(3.5) == doctest::Approx(1.9985301716088742).epsilon(1e-12));
    CHECK(log_bessel_i0(10.0) == doctest::Approx(7.9429720831186956).epsilon(1e-12));
    // Across the series/asymptotic switch at x = 20.
    CHECK(log_bessel_i0(19.9) == doctest::Approx(17.492149818621351).epsilon(1e-12));
    CHECK(log_bessel_i0(20.1) == doctest::Approx(17.687083876788981).epsilon(1e-12));
    CHECK(log_bessel_i0(50.0) == doctest::Approx(47.127575501871805).epsilon(1e-12));
    CHECK(log_bessel_i0(300.0) == doctest::Approx(296.22958759300223).epsilon(1e-12));
    CHECK(log_bessel_i0(0.0) == doctest::Approx(0.0));
}

TEST_CASE("Bessel ratio and its inverse") {
    CHECK(bessel_ratio_i1_i0(0.1) == doctest::Approx(0.049937603987938922).epsilon(1e-12));
    CHECK(bessel_ratio_i1_i0(1.0) == doctest::Approx(0.44638996589653451).epsilon(1e-12));
    CHECK(bessel_ratio_i1_i0(3.5) == doctest::Approx(0.84110379705083655).epsilon(1e-12));
    CHECK(bessel_ratio_i1_i0(10.0) == doctest::Approx(0.94859982595484596).epsilon(1e-12));
    CHECK(bessel_ratio_i1_i0(50.0) == doctest::Approx(0.98994896737849775).epsilon(1e-12));

    for (double kappa : {0.05, 0.3, 1.0, 2.0, 7.5, 40.0, 200.0}) {
        const double a = bessel_ratio_i1_i0(kappa);
        CHECK(inverse_bessel_ratio(a) == doctest::Approx(kappa).epsilon(1e-8));
    }
    CHECK(inverse_bessel_ratio(0.0) == 0.0);
    CHECK_THROWS_AS((void)inverse_bessel_ratio(1.0), numeric_error);
    CHECK_THROWS_AS((void)inverse_bessel_ratio(-0.1), numeric_error);
}

TEST_CASE("digamma and trigamma against reference values") {
    CHECK(digamma(0.07) == doctest::Approx(-14.753326705581838).epsilon(1e-12));
    CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
    CHECK(digamma(1.3) == doctest::Approx(-0.16919088886679961).epsilon(1e-12));
    CHECK(digamma(4.2) == doctest::Approx(1.3113388912865996).epsilon(1e-12));
    CHECK(digamma(25.0) == doctest::Approx(3.198742512851974).epsilon(1e-12));
    CHECK(trigamma(0.07) == doctest::Approx(205.57287896946511).epsilon(1e-11));
    CHECK(trigamma(0.5) == doctest::Approx(4.9348022005446793).epsilon(1e-12));
    CHECK(trigamma(1.3) == doctest::Approx(1.1342534349966193).epsilon(1e-12));
    CHECK(trigamma(4.2) == doctest::Approx(0.26866494073140078).epsilon(1e-12));
    CHECK(trigamma(25.0) == doctest::Approx(0.040810663257225579).epsilon(1e-12));
    CHECK_THROWS_AS((void)digamma(0.0), numeric_error);
    CHECK_THROWS_AS((void)trigamma(-2.0), numeric_error);
}

TEST_CASE("inverse digamma round trip") {
    for (double x : {0.03, 0.2, 0.9, 1.0, 2.7, 15.0, 120.0}) {
        CHECK(inverse_digamma(digamma(x)) == doctest::Approx(x).epsilon(1e-10));
    }
}

TEST_CASE("log factorial") {
    CHECK(log_factorial(0) == doctest::Approx(0.0));
    CHECK(log_factorial(1) == doctest::Approx(0.0));
    CHECK(log_factorial(5) == doctest::Approx(std::log(120.0)).epsilon(1e-13));
    CHECK(log_factorial(20) == doctest::Approx(42.335616460753485).epsilon(1e-12));
}

TEST_CASE("seed derivation is deterministic and spreads") {
    CHECK(derive_seed(42, 0) == derive_seed(42, 0));
    CHECK(derive_seed(42, 0) != derive_seed(42, 1));
    CHECK(derive_seed(42, 0) != derive_seed(43, 0));
}
