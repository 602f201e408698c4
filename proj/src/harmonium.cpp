#include "harmoniums/harmonium.hpp"

#include <stdexcept>

#include "harmoniums/errors.hpp"
#include "harmoniums/special.hpp"

namespace harmoniums {

Harmonium::Harmonium(FamilyDescriptor obs_family, FamilyDescriptor lat_family,
                     NaturalPoint theta_x_in, NaturalPoint theta_z_in, Matrix theta_xz_in)
    : obs(std::move(obs_family)),
      lat(std::move(lat_family)),
      theta_x(std::move(theta_x_in)),
      theta_z(std::move(theta_z_in)),
      theta_xz(std::move(theta_xz_in)) {
    if (theta_x.family != obs || theta_z.family != lat)
        throw std::domain_error("Harmonium: bias families do not match the descriptors");
    if (theta_xz.rows() != obs.dimension() || theta_xz.cols() != lat.dimension())
        throw std::domain_error("Harmonium: interaction matrix shape mismatch");
    if (!theta_xz.allFinite())
        throw std::domain_error("Harmonium: interactions must be finite");
}

NaturalPoint likelihood_params(const Harmonium& h, const Observation& z) {
    return NaturalPoint(h.obs, h.theta_x.coords + h.theta_xz * sufficient_statistic(h.lat, z));
}

NaturalPoint posterior_params(const Harmonium& h, const Observation& x) {
    return NaturalPoint(h.lat,
                        h.theta_z.coords + h.theta_xz.transpose() * sufficient_statistic(h.obs, x));
}

NaturalPoint prior_params(const Harmonium& h, const ConjugationParams& c) {
    if (c.rho.size() != h.lat.dimension())
        throw std::domain_error("prior_params: conjugation vector length mismatch");
    return NaturalPoint(h.lat, h.theta_z.coords + c.rho);
}

double joint_log_partition(const Harmonium& h, const ConjugationParams& c) {
    return log_partition(h.lat, prior_params(h, c)) + c.chi;
}

double joint_log_density(const Harmonium& h, const ConjugationParams& c,
                         const Observation& x, const Observation& z) {
    const Vector sx = sufficient_statistic(h.obs, x);
    const Vector sz = sufficient_statistic(h.lat, z);
    return sx.dot(h.theta_x.coords) + sz.dot(h.theta_z.coords) +
           sx.dot(h.theta_xz * sz) - joint_log_partition(h, c) +
           log_base_measure(h.obs, x) + log_base_measure(h.lat, z);
}

double observable_log_density(const Harmonium& h, const ConjugationParams& c,
                              const Observation& x) {
    const Vector sx = sufficient_statistic(h.obs, x);
    const NaturalPoint post = posterior_params(h, x);
    return sx.dot(h.theta_x.coords) + log_partition(h.lat, post) -
           joint_log_partition(h, c) + log_base_measure(h.obs, x);
}

std::vector<std::pair<Observation, Observation>>
sample_joint(const Harmonium& h, const ConjugationParams& c, std::uint64_t rng_seed, int count) {
    const NaturalPoint prior = prior_params(h, c);
    std::vector<Observation> zs = sample(h.lat, prior, derive_seed(rng_seed, 0), count);
    std::vector<std::pair<Observation, Observation>> out;
    out.reserve(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
        const NaturalPoint lik = likelihood_params(h, zs[i]);
        std::vector<Observation> xs = sample(h.obs, lik, derive_seed(rng_seed, i + 1), 1);
        out.emplace_back(std::move(xs[0]), std::move(zs[i]));
    }
    return out;
}

std::vector<std::pair<Observation, Observation>>
gibbs_chain(const Harmonium& h, const Observation& x0, int steps, std::uint64_t rng_seed) {
    std::vector<std::pair<Observation, Observation>> chain;
    chain.reserve(static_cast<std::size_t>(steps));
    Observation x = x0;
    for (int t = 0; t < steps; ++t) {
        Observation z =
            sample(h.lat, posterior_params(h, x), derive_seed(rng_seed, 2 * t), 1)[0];
        x = sample(h.obs, likelihood_params(h, z), derive_seed(rng_seed, 2 * t + 1), 1)[0];
        chain.emplace_back(x, std::move(z));
    }
    return chain;
}

ConditionalMoments conditional_expectations(const Harmonium& h, const Observation& x) {
    ConditionalMoments out;
    out.obs_statistic = sufficient_statistic(h.obs, x);
    out.latent_mean = to_mean(h.lat, posterior_params(h, x)).coords;
    out.interaction = out.obs_statistic * out.latent_mean.transpose();
    return out;
}

} // namespace harmoniums
