#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace harmoniums {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class FamilyKind {
    Categorical,        // indices 0..dK, one-hot statistic (state 0 maps to zero)
    PoissonProduct,     // independent Poisson counts
    MultivariateNormal, // statistic (x, tril(x otimes x))
    VonMisesProduct,    // angles, statistic (cos z, sin z) per coordinate
    Dirichlet,          // simplex weights, statistic (log z_0, ..., log z_d)
    Boltzmann,          // binary neurons, statistic (z, {z_i z_j : i < j})
    CoMPoissonProduct,  // counts, statistic (n, log n!) per coordinate
    NaturalPrior,       // sample space = natural parameters of a base family,
                        // statistic (z, psi_base(z)); density evaluation only
};

/// Identifies one exponential family: sample space, sufficient statistic and
/// base measure are all determined by the kind and size.
class FamilyDescriptor {
public:
    static FamilyDescriptor categorical(int num_nonzero_states);
    static FamilyDescriptor poisson_product(int neuron_count);
    static FamilyDescriptor multivariate_normal(int dimension);
    static FamilyDescriptor von_mises_product(int dimension);
    static FamilyDescriptor dirichlet(int simplex_dimension);
    static FamilyDescriptor boltzmann(int neuron_count);
    static FamilyDescriptor com_poisson_product(int dimension);
    /// Conjugate prior family over the natural parameter space of `base`
    /// with statistic (z, psi_base(z)).
    static FamilyDescriptor natural_prior(const FamilyDescriptor& base);

    FamilyKind kind() const { return kind_; }
    /// The size parameter of the kind (dK, dN, n, d or m).
    int size() const { return size_; }
    /// Length of the sufficient statistic / parameter vectors.
    int dimension() const;
    const FamilyDescriptor& base() const;

    std::string name() const;
    bool operator==(const FamilyDescriptor& other) const;
    bool operator!=(const FamilyDescriptor& other) const { return !(*this == other); }

private:
    FamilyDescriptor(FamilyKind kind, int size,
                     std::shared_ptr<const FamilyDescriptor> base = nullptr);

    FamilyKind kind_;
    int size_;
    std::shared_ptr<const FamilyDescriptor> base_;
};

/// A point in the natural parameter space of a family. The constructor
/// validates the family-specific invariants and throws std::domain_error
/// on violation.
struct NaturalPoint {
    NaturalPoint(FamilyDescriptor family, Vector coords);

    FamilyDescriptor family;
    Vector coords;
};

/// A point in the mean parameter space of a family.
struct MeanPoint {
    MeanPoint(FamilyDescriptor family, Vector coords);

    FamilyDescriptor family;
    Vector coords;
};

/// A point in the sample space of a family, encoded as a real vector
/// (Categorical: a single index; Boltzmann: a binary vector; count families:
/// nonnegative integers; VonMisesProduct: angles in [0, 2pi); Dirichlet:
/// positive weights summing to one).
struct Observation {
    Observation(FamilyDescriptor family, Vector value);

    FamilyDescriptor family;
    Vector value;
};

Vector sufficient_statistic(const FamilyDescriptor& family, const Observation& x);
double log_base_measure(const FamilyDescriptor& family, const Observation& x);
double log_partition(const FamilyDescriptor& family, const NaturalPoint& theta);

/// Forward mapping tau: the gradient of the log-partition at theta.
MeanPoint to_mean(const FamilyDescriptor& family, const NaturalPoint& theta);

/// Backward mapping tau^{-1}; closed form where available, Newton iteration
/// otherwise.
NaturalPoint to_natural(const FamilyDescriptor& family, const MeanPoint& eta);

double log_density(const FamilyDescriptor& family, const NaturalPoint& theta,
                   const Observation& x);

std::vector<Observation> sample(const FamilyDescriptor& family, const NaturalPoint& theta,
                                std::uint64_t rng_seed, int count);

/// Enumerates the full sample space of a discrete family with finite support
/// (Categorical, Boltzmann). Throws unsupported_error otherwise.
std::vector<Observation> enumerate_support(const FamilyDescriptor& family);

// Packing helpers for the multivariate normal / Boltzmann statistic layouts.

/// Row-major lower-triangle (including diagonal) of a symmetric matrix,
/// n(n+1)/2 entries.
Vector pack_tril(const Matrix& m);

/// Reconstructs the symmetric interaction matrix from a tril coordinate block:
/// builds the lower-triangular matrix and symmetrizes as (L + L^T)/2, so the
/// quadratic form x.S.x reproduces the statistic inner product.
Matrix unpack_tril_symmetric(const Vector& coords, int n);

/// Row-major strict upper pairs {(i,j) : i < j}, m(m-1)/2 entries.
Vector pack_pairs(const Matrix& m);

} // namespace harmoniums
