#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "harmoniums/harmonium.hpp"

namespace harmoniums {

enum class Algorithm { EM, CE_GD, EM_GD, CE_MCGD, EM_MCGD };

/// Model classes with computable conjugation parameters and model
/// expectations. Mixture covers any observable family over a categorical
/// latent; the Gaussian classes require the mean-block interaction
/// structure.
enum class ModelClass { Mixture, LinearGaussian, GaussianBoltzmann };

struct TrainConfig {
    Algorithm algorithm = Algorithm::CE_GD;
    int epochs = 100;
    double learning_rate = 3e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 0; // 0 = full batch
    int mc_model_samples = 10;
    int mc_conditional_samples = 1;
    int estep_refresh_epochs = 100;
    std::uint64_t seed = 0;
};

struct FitTrace {
    std::vector<double> cross_entropy; // initial value plus one entry per epoch
    std::optional<Harmonium> model;
    ConjugationParams conjugation;
    bool aborted = false; // divergence: trace holds the epochs completed
};

/// Averaged sufficient statistics (eta_x, eta_z, interaction block); also the
/// layout of cross-entropy gradients.
struct MeanTriple {
    Vector eta_x;
    Vector eta_z;
    Matrix interaction;
};

/// Restriction of the harmonium statistic to a linear subspace: rows of `a`
/// span the trainable directions in the flattened parameter layout
/// (theta_x, theta_z, theta_xz row-major).
struct SubspaceEmbedding {
    Matrix a;
};

/// Conjugation parameters recomputed from the current natural parameters.
ConjugationParams conjugation_for(const Harmonium& h, ModelClass model_class);

/// Mean of the pointwise cross-entropy -log q_X over the data.
double cross_entropy(const Harmonium& h, const ConjugationParams& c,
                     const std::vector<Observation>& data);

/// Arithmetic mean of conditional_expectations over the data.
MeanTriple e_step(const Harmonium& h, const std::vector<Observation>& data);

/// Exact M-step via the backward mapping; mixtures and linear Gaussian
/// models only.
Harmonium m_step_exact(ModelClass model_class, const FamilyDescriptor& obs,
                       const FamilyDescriptor& lat, const MeanTriple& averaged);

/// Expected sufficient statistics of the model itself, tau_XZ(theta):
/// exact enumeration over the latent support, or Gaussian closed forms.
MeanTriple model_expectations(const Harmonium& h, ModelClass model_class);

/// Cross-entropy gradients with respect to the natural parameters:
/// model expectations minus averaged conditional expectations.
MeanTriple ce_gradients(const Harmonium& h, ModelClass model_class,
                        const std::vector<Observation>& data);

FitTrace fit(const Harmonium& h0, ModelClass model_class,
             const std::vector<Observation>& data, const TrainConfig& config);

/// Gradient training restricted to the row space of the embedding; gradients
/// are computed in the full space and pulled back through `a`.
FitTrace subspace_fit(const Harmonium& h0, const SubspaceEmbedding& embedding,
                      ModelClass model_class, const std::vector<Observation>& data,
                      const TrainConfig& config);

// Flattened parameter layout helpers shared with the tests.
Vector pack_parameters(const Harmonium& h);
Harmonium unpack_parameters(const FamilyDescriptor& obs, const FamilyDescriptor& lat,
                            const Vector& flat);
Vector pack_triple(const MeanTriple& t);

} // namespace harmoniums
