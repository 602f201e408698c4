#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/inference.hpp"
#include "test_util.hpp"

using namespace harmoniums;
using test_util::random_natural;

namespace {
constexpr double two_pi = 2.0 * std::numbers::pi;
}

TEST_CASE("bayes_update equals the harmonium posterior under conjugation") {
    std::mt19937_64 rng(51);
    const auto obs = FamilyDescriptor::multivariate_normal(1);
    Vector w(3);
    w << 0.3, 0.3, 0.4;
    std::vector<NaturalPoint> comps;
    for (int k = 0; k < 3; ++k)
        comps.push_back(random_natural(obs, rng));
    auto [h, c] = mixture_from_components(w, comps);
    const NaturalPoint prior = prior_params(h, c);
    for (double x : {-1.0, 0.2, 1.7}) {
        const Observation ox(obs, Vector::Constant(1, x));
        const NaturalPoint a = bayes_update(prior, h.theta_xz, c.rho, ox);
        const NaturalPoint b = posterior_params(h, ox);
        CHECK((a.coords - b.coords).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("posterior matches a quadrature oracle for a von Mises latent") {
    // Poisson population over an angle; compare the closed-form posterior
    // density with the normalized product of prior and likelihood on a grid.
    const int n_neurons = 12;
    const auto obs = FamilyDescriptor::poisson_product(n_neurons);
    const auto lat = FamilyDescriptor::von_mises_product(1);
    Vector theta_x = Vector::Constant(n_neurons, std::log(8.0) - 1.5);
    Matrix theta_xz(n_neurons, 2);
    for (int i = 0; i < n_neurons; ++i) {
        const double phi = two_pi * i / n_neurons;
        theta_xz(i, 0) = 1.5 * std::cos(phi);
        theta_xz(i, 1) = 1.5 * std::sin(phi);
    }
    Vector theta_z(2);
    theta_z << 0.3, -0.2;
    const Harmonium h(obs, lat, NaturalPoint(obs, theta_x), NaturalPoint(lat, theta_z),
                      theta_xz);

    // With evenly spaced tuning the likelihood log-partition is affine in
    // (cos z, sin z) up to numerical residual; fit rho on a grid.
    std::vector<Observation> probes;
    for (int g = 0; g < 128; ++g)
        probes.emplace_back(lat, Vector::Constant(1, two_pi * g / 128.0));
    auto [c, residual] = fit_conjugation(h, probes);
    REQUIRE(residual < 1e-6);

    Vector counts(n_neurons);
    counts << 3, 6, 1, 0, 0, 2, 4, 1, 0, 2, 5, 3;
    const Observation x(obs, counts);
    const NaturalPoint prior = prior_params(h, c);
    const NaturalPoint post = bayes_update(prior, theta_xz, c.rho, x);

    // grid Bayes oracle
    const int nodes = 4096;
    std::vector<double> unnorm(nodes);
    double total = 0.0;
    for (int g = 0; g < nodes; ++g) {
        const Observation z(lat, Vector::Constant(1, g * two_pi / nodes));
        unnorm[std::size_t(g)] = std::exp(log_density(lat, prior, z) +
                                          log_density(obs, likelihood_params(h, z), x));
        total += unnorm[std::size_t(g)] * (two_pi / nodes);
    }
    double tv = 0.0;
    for (int g = 0; g < nodes; ++g) {
        const Observation z(lat, Vector::Constant(1, g * two_pi / nodes));
        const double oracle = unnorm[std::size_t(g)] / total;
        const double closed = std::exp(log_density(lat, post, z));
        tv += 0.5 * std::abs(oracle - closed) * (two_pi / nodes);
    }
    CHECK(tv < 1e-3);
}

TEST_CASE("posterior matches the joint-Gaussian conditional for an LGM") {
    Vector m_x(2), m_z(2);
    m_x << 1.0, -0.5;
    m_z << 0.0, 0.5;
    Matrix sigma_x(2, 2), sigma_z(2, 2), w(2, 2);
    sigma_x << 0.8, 0.1, 0.1, 1.2;
    sigma_z << 1.0, -0.2, -0.2, 0.7;
    w << 0.9, 0.3, -0.4, 0.6;
    auto [h, c] = lgm_from_moments(m_x, sigma_x, w, m_z, sigma_z);

    Vector x(2);
    x << 0.3, 0.9;
    const NaturalPoint post = posterior_params(h, Observation(h.obs, x));
    // conditional z | x of the joint Gaussian
    const Matrix marg_cov = sigma_x + w * sigma_z * w.transpose();
    Eigen::LLT<Matrix> llt(marg_cov);
    const Matrix cross = w * sigma_z; // cov(x, z)
    const Vector cond_mean = m_z + cross.transpose() * llt.solve(x - (m_x + w * m_z));
    const Matrix cond_cov = sigma_z - cross.transpose() * llt.solve(cross);

    const Vector eta = to_mean(h.lat, post).coords;
    CHECK((eta.head(2) - cond_mean).cwiseAbs().maxCoeff() < 1e-10);
    Matrix half = unpack_tril_symmetric(eta.tail(3), 2);
    Matrix moment = 2.0 * half;
    moment.diagonal() = half.diagonal();
    const Matrix cov_got = moment - eta.head(2) * eta.head(2).transpose();
    CHECK((cov_got - cond_cov).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("dirichlet recursive updates count observations in any order") {
    auto [h, c] = dirichlet_categorical_harmonium(3);
    const NaturalPoint prior = prior_params(h, c);
    std::vector<Observation> xs;
    std::mt19937_64 rng(55);
    std::uniform_int_distribution<int> cat(0, 3);
    for (int i = 0; i < 25; ++i)
        xs.emplace_back(h.obs, Vector::Constant(1, double(cat(rng))));
    const std::vector<ConjugatedLikelihood> liks(
        xs.size(), ConjugatedLikelihood{h.obs, h.theta_xz, c.rho});

    const NaturalPoint post = recursive_update(prior, liks, xs);
    Vector counts = Vector::Zero(4);
    for (const Observation& x : xs)
        counts(int(x.value(0))) += 1.0;
    CHECK((post.coords - counts).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<Observation> shuffled = xs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const NaturalPoint post2 = recursive_update(prior, liks, shuffled);
    CHECK((post.coords - post2.coords).cwiseAbs().maxCoeff() < 1e-12);

    std::vector<Observation> short_xs(xs.begin(), xs.begin() + 3);
    CHECK_THROWS_AS((void)recursive_update(prior, liks, short_xs), std::domain_error);
}

TEST_CASE("dirichlet posterior matches the grid Bayes oracle") {
    auto [h, c] = dirichlet_categorical_harmonium(1); // Beta on two categories
    const NaturalPoint prior = prior_params(h, c);
    std::vector<Observation> xs;
    for (int k : {0, 1, 1, 0, 1, 1, 1, 0, 1, 1})
        xs.emplace_back(h.obs, Vector::Constant(1, double(k)));
    const std::vector<ConjugatedLikelihood> liks(
        xs.size(), ConjugatedLikelihood{h.obs, h.theta_xz, c.rho});
    const NaturalPoint post = recursive_update(prior, liks, xs);

    const int nodes = 20000;
    double total = 0.0;
    std::vector<double> unnorm(nodes);
    for (int g = 0; g < nodes; ++g) {
        const double p0 = (g + 0.5) / nodes;
        double ll = 0.0;
        for (const Observation& x : xs)
            ll += std::log(int(x.value(0)) == 0 ? p0 : 1.0 - p0);
        unnorm[std::size_t(g)] = std::exp(ll); // uniform prior
        total += unnorm[std::size_t(g)] / nodes;
    }
    double tv = 0.0;
    for (int g = 0; g < nodes; ++g) {
        const double p0 = (g + 0.5) / nodes;
        Vector pvec(2);
        pvec << p0, 1.0 - p0;
        const double closed = std::exp(log_density(h.lat, post, Observation(h.lat, pvec)));
        tv += 0.5 * std::abs(unnorm[std::size_t(g)] / total - closed) / nodes;
    }
    CHECK(tv < 1e-3);
}
