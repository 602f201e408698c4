#include <doctest.h>

#include <cmath>
#include <random>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/errors.hpp"
#include "harmoniums/learning.hpp"
#include "test_util.hpp"

using namespace harmoniums;
using test_util::random_natural;

namespace {

Harmonium poisson_mixture(std::mt19937_64& rng, int dk = 2) {
    const auto obs = FamilyDescriptor::poisson_product(2);
    std::uniform_real_distribution<double> unif(0.2, 1.0);
    Vector w(dk + 1);
    for (int k = 0; k <= dk; ++k)
        w(k) = unif(rng);
    w /= w.sum();
    std::vector<NaturalPoint> comps;
    for (int k = 0; k <= dk; ++k)
        comps.push_back(random_natural(obs, rng));
    return mixture_from_components(w, comps).first;
}

std::vector<Observation> observations_of(const Harmonium& h, const ConjugationParams& c,
                                         int count, std::uint64_t seed) {
    std::vector<Observation> out;
    for (auto& [x, z] : sample_joint(h, c, seed, count))
        out.push_back(std::move(x));
    return out;
}

Harmonium random_lgm(std::mt19937_64& rng, int n = 2, int m = 1) {
    std::normal_distribution<double> normal(0.0, 0.6);
    Vector m_x(n), m_z(m);
    Matrix w(n, m), ax(n, n), az(m, m);
    for (int i = 0; i < n; ++i)
        m_x(i) = normal(rng);
    for (int j = 0; j < m; ++j)
        m_z(j) = normal(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            w(i, j) = normal(rng);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            ax(i, j) = 0.3 * normal(rng);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            az(i, j) = 0.3 * normal(rng);
    return lgm_from_moments(m_x, ax * ax.transpose() + Matrix::Identity(n, n), w, m_z,
                            az * az.transpose() + Matrix::Identity(m, m))
        .first;
}

Harmonium random_gaussian_boltzmann(std::mt19937_64& rng, int n = 2, int m = 2) {
    const auto obs = FamilyDescriptor::multivariate_normal(n);
    const auto lat = FamilyDescriptor::boltzmann(m);
    std::normal_distribution<double> normal(0.0, 0.4);
    Matrix theta_xz = Matrix::Zero(obs.dimension(), lat.dimension());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            theta_xz(i, j) = normal(rng);
    return Harmonium(obs, lat, random_natural(obs, rng), random_natural(lat, rng), theta_xz);
}

// Selection embedding of the coordinates allowed to move for the Gaussian
// model classes: both biases plus the mean-block corner of the interaction.
SubspaceEmbedding mean_block_embedding(const FamilyDescriptor& obs,
                                       const FamilyDescriptor& lat) {
    const int dx = obs.dimension();
    const int dz = lat.dimension();
    std::vector<int> keep;
    for (int i = 0; i < dx + dz; ++i)
        keep.push_back(i);
    for (int i = 0; i < obs.size(); ++i)
        for (int j = 0; j < lat.size(); ++j)
            keep.push_back(dx + dz + i * dz + j);
    Matrix a = Matrix::Zero(Eigen::Index(keep.size()), dx + dz + dx * dz);
    for (std::size_t r = 0; r < keep.size(); ++r)
        a(Eigen::Index(r), keep[r]) = 1.0;
    return {std::move(a)};
}

double ce_at(const Harmonium& shape, ModelClass mc, const Vector& flat,
             const std::vector<Observation>& data) {
    const Harmonium h = unpack_parameters(shape.obs, shape.lat, flat);
    return cross_entropy(h, conjugation_for(h, mc), data);
}

} // namespace

TEST_CASE("cross entropy is the mean negative log-density") {
    std::mt19937_64 rng(61);
    const Harmonium h = poisson_mixture(rng);
    const ConjugationParams c = conjugation_for(h, ModelClass::Mixture);
    const auto data = observations_of(h, c, 20, 5);
    double direct = 0.0;
    for (const Observation& x : data)
        direct -= observable_log_density(h, c, x) / double(data.size());
    CHECK(cross_entropy(h, c, data) == doctest::Approx(direct).epsilon(1e-12));
    CHECK_THROWS_AS((void)cross_entropy(h, c, {}), std::domain_error);
}

TEST_CASE("e_step averages the conditional moments") {
    std::mt19937_64 rng(63);
    const Harmonium h = poisson_mixture(rng);
    const ConjugationParams c = conjugation_for(h, ModelClass::Mixture);
    const auto data = observations_of(h, c, 15, 7);
    const MeanTriple t = e_step(h, data);
    Vector eta_z = Vector::Zero(h.lat.dimension());
    for (const Observation& x : data)
        eta_z += to_mean(h.lat, posterior_params(h, x)).coords / double(data.size());
    CHECK((t.eta_z - eta_z).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("model expectations agree with Monte Carlo sampling") {
    std::mt19937_64 rng(65);
    SUBCASE("mixture via latent enumeration") {
        const Harmonium h = poisson_mixture(rng);
        const ConjugationParams c = conjugation_for(h, ModelClass::Mixture);
        const MeanTriple t = model_expectations(h, ModelClass::Mixture);
        const int draws = 60000;
        Vector acc = Vector::Zero(pack_triple(t).size());
        for (const auto& [x, z] : sample_joint(h, c, 31, draws)) {
            Vector sx = sufficient_statistic(h.obs, x);
            Vector sz = sufficient_statistic(h.lat, z);
            Vector flat(acc.size());
            flat.head(sx.size()) = sx;
            flat.segment(sx.size(), sz.size()) = sz;
            int idx = int(sx.size() + sz.size());
            for (Eigen::Index i = 0; i < sx.size(); ++i)
                for (Eigen::Index j = 0; j < sz.size(); ++j)
                    flat(idx++) = sx(i) * sz(j);
            acc += flat / double(draws);
        }
        const Vector exact = pack_triple(t);
        for (Eigen::Index i = 0; i < exact.size(); ++i)
            CHECK(acc(i) == doctest::Approx(exact(i)).epsilon(0.05).scale(1.0));
    }
    SUBCASE("linear Gaussian via moment formulas") {
        const Harmonium h = random_lgm(rng);
        const ConjugationParams c = conjugation_for(h, ModelClass::LinearGaussian);
        const MeanTriple t = model_expectations(h, ModelClass::LinearGaussian);
        const int draws = 200000;
        Vector acc = Vector::Zero(pack_triple(t).size());
        for (const auto& [x, z] : sample_joint(h, c, 33, draws)) {
            Vector sx = sufficient_statistic(h.obs, x);
            Vector sz = sufficient_statistic(h.lat, z);
            Vector flat(acc.size());
            flat.head(sx.size()) = sx;
            flat.segment(sx.size(), sz.size()) = sz;
            int idx = int(sx.size() + sz.size());
            for (Eigen::Index i = 0; i < sx.size(); ++i)
                for (Eigen::Index j = 0; j < sz.size(); ++j)
                    flat(idx++) = sx(i) * sz(j);
            acc += flat / double(draws);
        }
        const Vector exact = pack_triple(t);
        for (Eigen::Index i = 0; i < exact.size(); ++i)
            CHECK(acc(i) == doctest::Approx(exact(i)).epsilon(0.05).scale(1.0));
    }
}

TEST_CASE("cross-entropy gradients match finite differences") {
    std::mt19937_64 rng(67);
    SUBCASE("mixture: every coordinate") {
        const Harmonium h = poisson_mixture(rng);
        const ConjugationParams c = conjugation_for(h, ModelClass::Mixture);
        const auto data = observations_of(h, c, 25, 11);
        const Vector grad = pack_triple(ce_gradients(h, ModelClass::Mixture, data));
        const Vector flat = pack_parameters(h);
        const Vector fd = test_util::fd_gradient(
            [&](const Vector& t) { return ce_at(h, ModelClass::Mixture, t, data); }, flat);
        for (Eigen::Index i = 0; i < grad.size(); ++i)
            CHECK(grad(i) == doctest::Approx(fd(i)).epsilon(1e-4).scale(1e-2));
    }
    SUBCASE("linear Gaussian: trainable coordinates") {
        const Harmonium h = random_lgm(rng);
        const ConjugationParams c = conjugation_for(h, ModelClass::LinearGaussian);
        const auto data = observations_of(h, c, 25, 13);
        const Vector grad = pack_triple(ce_gradients(h, ModelClass::LinearGaussian, data));
        const Vector flat = pack_parameters(h);
        const SubspaceEmbedding emb = mean_block_embedding(h.obs, h.lat);
        for (Eigen::Index r = 0; r < emb.a.rows(); ++r) {
            Eigen::Index coord = 0;
            emb.a.row(r).maxCoeff(&coord);
            const double step = 1e-5;
            Vector hi = flat, lo = flat;
            hi(coord) += step;
            lo(coord) -= step;
            const double fd = (ce_at(h, ModelClass::LinearGaussian, hi, data) -
                               ce_at(h, ModelClass::LinearGaussian, lo, data)) /
                              (2.0 * step);
            CHECK(grad(coord) == doctest::Approx(fd).epsilon(1e-4).scale(1e-2));
        }
    }
    SUBCASE("gaussian-boltzmann: trainable coordinates") {
        const Harmonium h = random_gaussian_boltzmann(rng);
        const ConjugationParams c = conjugation_for(h, ModelClass::GaussianBoltzmann);
        const auto data = observations_of(h, c, 25, 17);
        const Vector grad = pack_triple(ce_gradients(h, ModelClass::GaussianBoltzmann, data));
        const Vector flat = pack_parameters(h);
        const SubspaceEmbedding emb = mean_block_embedding(h.obs, h.lat);
        for (Eigen::Index r = 0; r < emb.a.rows(); ++r) {
            Eigen::Index coord = 0;
            emb.a.row(r).maxCoeff(&coord);
            const double step = 1e-5;
            Vector hi = flat, lo = flat;
            hi(coord) += step;
            lo(coord) -= step;
            const double fd = (ce_at(h, ModelClass::GaussianBoltzmann, hi, data) -
                               ce_at(h, ModelClass::GaussianBoltzmann, lo, data)) /
                              (2.0 * step);
            CHECK(grad(coord) == doctest::Approx(fd).epsilon(1e-4).scale(1e-2));
        }
    }
}

TEST_CASE("EM is monotone and the M-step is a stationary point") {
    std::mt19937_64 rng(71);
    SUBCASE("mixture") {
        const Harmonium truth = poisson_mixture(rng);
        const ConjugationParams c = conjugation_for(truth, ModelClass::Mixture);
        const auto data = observations_of(truth, c, 80, 19);
        Harmonium h0 = poisson_mixture(rng);
        TrainConfig tc;
        tc.algorithm = Algorithm::EM;
        tc.epochs = 30;
        const FitTrace trace = fit(h0, ModelClass::Mixture, data, tc);
        REQUIRE(!trace.aborted);
        for (std::size_t i = 1; i < trace.cross_entropy.size(); ++i)
            CHECK(trace.cross_entropy[i] <= trace.cross_entropy[i - 1] + 1e-9);

        // M-step output reproduces the conditional statistics it was fed
        const MeanTriple avg = e_step(*trace.model, data);
        const Harmonium next =
            m_step_exact(ModelClass::Mixture, truth.obs, truth.lat, avg);
        const Vector model_stats = pack_triple(model_expectations(next, ModelClass::Mixture));
        const Vector target = pack_triple(avg);
        CHECK((model_stats - target).cwiseAbs().maxCoeff() < 1e-8);
        // so the gradient with frozen conditionals vanishes there
        const Vector grad = model_stats - target;
        CHECK(grad.cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("linear Gaussian") {
        const Harmonium truth = random_lgm(rng);
        const ConjugationParams c = conjugation_for(truth, ModelClass::LinearGaussian);
        const auto data = observations_of(truth, c, 80, 23);
        Harmonium h0 = random_lgm(rng);
        TrainConfig tc;
        tc.algorithm = Algorithm::EM;
        tc.epochs = 30;
        const FitTrace trace = fit(h0, ModelClass::LinearGaussian, data, tc);
        REQUIRE(!trace.aborted);
        for (std::size_t i = 1; i < trace.cross_entropy.size(); ++i)
            CHECK(trace.cross_entropy[i] <= trace.cross_entropy[i - 1] + 1e-9);

        // stationarity on the trainable coordinates
        const MeanTriple avg = e_step(*trace.model, data);
        const Harmonium next =
            m_step_exact(ModelClass::LinearGaussian, truth.obs, truth.lat, avg);
        const Vector grad = pack_triple(model_expectations(next, ModelClass::LinearGaussian)) -
                            pack_triple(avg);
        const SubspaceEmbedding emb = mean_block_embedding(truth.obs, truth.lat);
        CHECK((emb.a * grad).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("EM rejects model classes without an exact backward mapping") {
        const Harmonium h = random_gaussian_boltzmann(rng);
        TrainConfig tc;
        tc.algorithm = Algorithm::EM;
        const ConjugationParams c = conjugation_for(h, ModelClass::GaussianBoltzmann);
        const auto data = observations_of(h, c, 10, 29);
        CHECK_THROWS_AS((void)fit(h, ModelClass::GaussianBoltzmann, data, tc),
                        unsupported_error);
    }
}

TEST_CASE("gradient descent variants reduce the cross entropy deterministically") {
    std::mt19937_64 rng(73);
    const Harmonium truth = poisson_mixture(rng);
    const ConjugationParams c = conjugation_for(truth, ModelClass::Mixture);
    const auto data = observations_of(truth, c, 60, 31);
    const Harmonium h0 = poisson_mixture(rng);

    for (Algorithm alg :
         {Algorithm::CE_GD, Algorithm::EM_GD, Algorithm::CE_MCGD, Algorithm::EM_MCGD}) {
        CAPTURE(int(alg));
        TrainConfig tc;
        tc.algorithm = alg;
        tc.epochs = 60;
        tc.batch_size = (alg == Algorithm::CE_MCGD || alg == Algorithm::EM_MCGD) ? 10 : 0;
        tc.seed = 5;
        const FitTrace trace = fit(h0, ModelClass::Mixture, data, tc);
        REQUIRE(!trace.aborted);
        CHECK(trace.cross_entropy.size() == std::size_t(tc.epochs) + 1);
        CHECK(trace.cross_entropy.back() < trace.cross_entropy.front());

        const FitTrace again = fit(h0, ModelClass::Mixture, data, tc);
        REQUIRE(again.cross_entropy.size() == trace.cross_entropy.size());
        for (std::size_t i = 0; i < trace.cross_entropy.size(); ++i)
            CHECK(trace.cross_entropy[i] == again.cross_entropy[i]);
    }
}

TEST_CASE("subspace training moves only along the embedding rows") {
    std::mt19937_64 rng(79);
    const Harmonium truth = random_gaussian_boltzmann(rng);
    const ConjugationParams c = conjugation_for(truth, ModelClass::GaussianBoltzmann);
    const auto data = observations_of(truth, c, 60, 37);
    const Harmonium h0 = random_gaussian_boltzmann(rng);
    const SubspaceEmbedding emb = mean_block_embedding(h0.obs, h0.lat);

    TrainConfig tc;
    tc.algorithm = Algorithm::CE_GD;
    tc.epochs = 40;
    const FitTrace trace = subspace_fit(h0, emb, ModelClass::GaussianBoltzmann, data, tc);
    REQUIRE(!trace.aborted);
    CHECK(trace.cross_entropy.back() < trace.cross_entropy.front());

    // frozen coordinates never move
    const Vector before = pack_parameters(h0);
    const Vector after = pack_parameters(*trace.model);
    Vector mask = Vector::Ones(before.size());
    for (Eigen::Index r = 0; r < emb.a.rows(); ++r) {
        Eigen::Index coord = 0;
        emb.a.row(r).maxCoeff(&coord);
        mask(coord) = 0.0;
    }
    CHECK(((after - before).array() * mask.array()).abs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(
        (void)subspace_fit(h0, SubspaceEmbedding{Matrix::Zero(2, before.size())},
                           ModelClass::GaussianBoltzmann, data, tc),
        std::domain_error);
    TrainConfig em_tc;
    em_tc.algorithm = Algorithm::EM;
    CHECK_THROWS_AS(
        (void)subspace_fit(h0, emb, ModelClass::GaussianBoltzmann, data, em_tc),
        unsupported_error);
}

TEST_CASE("pack and unpack round trip") {
    std::mt19937_64 rng(83);
    const Harmonium h = poisson_mixture(rng);
    const Vector flat = pack_parameters(h);
    const Harmonium back = unpack_parameters(h.obs, h.lat, flat);
    CHECK((pack_parameters(back) - flat).norm() == 0.0);
    CHECK_THROWS_AS((void)unpack_parameters(h.obs, h.lat, Vector::Zero(3)),
                    std::domain_error);
}
