#pragma once

#include <vector>

#include "harmoniums/harmonium.hpp"

namespace harmoniums {

/// One conjugated likelihood against a shared latent family: the interaction
/// matrix and conjugation vector of Eq. form prior + s_X(x).theta_xz - rho.
struct ConjugatedLikelihood {
    FamilyDescriptor obs;
    Matrix theta_xz;
    Vector rho;
};

/// Single-observation Bayes update in natural coordinates.
NaturalPoint bayes_update(const NaturalPoint& prior, const Matrix& theta_xz,
                          const Vector& rho, const Observation& x);

/// Fold of bayes_update over a sequence of (likelihood, observation) pairs;
/// the result is order independent.
NaturalPoint recursive_update(const NaturalPoint& prior,
                              const std::vector<ConjugatedLikelihood>& likelihoods,
                              const std::vector<Observation>& xs);

} // namespace harmoniums
