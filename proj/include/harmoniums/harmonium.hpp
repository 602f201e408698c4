#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "harmoniums/family.hpp"

namespace harmoniums {

/// Joint exponential family over an observable/latent pair with statistic
/// (s_X, s_Z, s_X otimes s_Z): biases theta_x, theta_z and interaction
/// matrix theta_xz of shape obs.dimension() x lat.dimension().
struct Harmonium {
    Harmonium(FamilyDescriptor obs_family, FamilyDescriptor lat_family,
              NaturalPoint theta_x_in, NaturalPoint theta_z_in, Matrix theta_xz_in);

    FamilyDescriptor obs;
    FamilyDescriptor lat;
    NaturalPoint theta_x;
    NaturalPoint theta_z;
    Matrix theta_xz;
};

/// The vector rho and scalar chi making the likelihood log-partition affine
/// in the latent statistic.
struct ConjugationParams {
    Vector rho;
    double chi = 0.0;
};

/// Natural parameters of the likelihood q_{X|Z=z}: theta_x + theta_xz . s_Z(z).
NaturalPoint likelihood_params(const Harmonium& h, const Observation& z);

/// Natural parameters of the posterior q_{Z|X=x}: theta_z + s_X(x) . theta_xz.
NaturalPoint posterior_params(const Harmonium& h, const Observation& x);

/// Natural parameters of the prior q_Z under conjugation: theta_z + rho.
NaturalPoint prior_params(const Harmonium& h, const ConjugationParams& c);

/// psi_Z(theta_z + rho) + chi.
double joint_log_partition(const Harmonium& h, const ConjugationParams& c);

double joint_log_density(const Harmonium& h, const ConjugationParams& c,
                         const Observation& x, const Observation& z);

double observable_log_density(const Harmonium& h, const ConjugationParams& c,
                              const Observation& x);

/// Ancestral sampling: z ~ q_Z, then x ~ q_{X|Z=z}.
std::vector<std::pair<Observation, Observation>>
sample_joint(const Harmonium& h, const ConjugationParams& c, std::uint64_t rng_seed, int count);

/// Alternating z ~ q_{Z|X=x}, x ~ q_{X|Z=z} draws, starting from x0.
/// Validation oracle only; returns one (x, z) pair per step.
std::vector<std::pair<Observation, Observation>>
gibbs_chain(const Harmonium& h, const Observation& x0, int steps, std::uint64_t rng_seed);

/// The conditional sufficient statistics given one observation:
/// (s_X(x), tau_Z(posterior_params(x)), outer product).
struct ConditionalMoments {
    Vector obs_statistic;
    Vector latent_mean;
    Matrix interaction;
};

ConditionalMoments conditional_expectations(const Harmonium& h, const Observation& x);

/// JSON round trip; field names {obs, lat, theta_x, theta_z, theta_xz} are
/// fixed for the CLI and test fixtures.
std::string to_json(const Harmonium& h);
Harmonium harmonium_from_json(const std::string& text);

} // namespace harmoniums
