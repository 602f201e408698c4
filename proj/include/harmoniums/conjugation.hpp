#pragma once

#include <utility>
#include <vector>

#include "harmoniums/harmonium.hpp"

namespace harmoniums {

/// Exact conjugation parameters for a categorical latent family:
/// rho_i = psi_X(theta_x + column_i) - psi_X(theta_x), chi = psi_X(theta_x).
ConjugationParams categorical_conjugation(const Harmonium& h);

/// Exact conjugation parameters for a multivariate-normal observable with a
/// latent family whose statistic is (z, second-order block); requires the
/// interaction matrix to touch only the mean blocks. Supports multivariate
/// normal and Boltzmann latents.
ConjugationParams linear_gaussian_conjugation(const Harmonium& h);

/// Least-squares fit of (rho, chi) against the likelihood log-partition at
/// the given probe points; second element is the max absolute deviation of
/// the conjugation identity over the probes.
std::pair<ConjugationParams, double>
fit_conjugation(const Harmonium& h, const std::vector<Observation>& z_probes);

/// Max over probes of |psi_X(theta_x + theta_xz.s_Z(z)) - s_Z(z).rho - chi|.
double verify_conjugation(const Harmonium& h, const ConjugationParams& c,
                          const std::vector<Observation>& z_probes);

/// The universal conjugate-prior construction for estimating the natural
/// parameters of `obs`: latent statistic (z, psi_X(z)), identity-and-zero
/// interactions, rho = (0,...,0,1), chi = 0. The latent family supports
/// statistic evaluation only.
std::pair<Harmonium, ConjugationParams> bayes_estimation_harmonium(const FamilyDescriptor& obs);

/// Categorical observable with a Dirichlet latent; the interaction matrix
/// has -1 down the first column and the identity on the rest, so posterior
/// updates increment the observed pseudo-count. theta_z defaults to -rho
/// (prior alpha = 1 everywhere) and may be overwritten by the caller.
std::pair<Harmonium, ConjugationParams> dirichlet_categorical_harmonium(int d);

/// Builds a mixture harmonium from component natural parameters and weights
/// over dK+1 components (component 0 first).
std::pair<Harmonium, ConjugationParams>
mixture_from_components(const Vector& weights, const std::vector<NaturalPoint>& components);

/// Builds a linear Gaussian model harmonium from its conventional moments:
/// prior N(m_z, sigma_z), likelihood N(m_x + w.z, sigma_x).
std::pair<Harmonium, ConjugationParams>
lgm_from_moments(const Vector& m_x, const Matrix& sigma_x, const Matrix& w,
                 const Vector& m_z, const Matrix& sigma_z);

/// Packs a symmetric quadratic-form matrix p into the tril statistic layout
/// (diagonal once, off-diagonals doubled) so that s.packed == z.p.z.
Vector pack_tril_quadratic(const Matrix& p);

} // namespace harmoniums
