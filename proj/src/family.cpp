#include "harmoniums/family.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "harmoniums/errors.hpp"
#include "harmoniums/special.hpp"

namespace harmoniums {

namespace {

constexpr int kBoltzmannMaxNeurons = 20;
constexpr int kComMaxTerms = 10000;

using Rng = std::mt19937_64;

void require(bool cond, const char* msg) {
    if (!cond)
        throw std::domain_error(msg);
}

bool all_finite(const Vector& v) {
    return v.allFinite();
}

bool is_count(double v) {
    return v >= 0.0 && v == std::floor(v) && std::isfinite(v);
}

// Streaming statistics of one CoM-Poisson coordinate with natural
// coordinates (log lambda, -nu). Sums the series for Z, E[n], E[log n!]
// and their second moments until the tail is negligible.
struct ComSeries {
    double log_z = 0.0;
    double mean_n = 0.0;
    double mean_lf = 0.0;      // E[log n!]
    double var_n = 0.0;
    double var_lf = 0.0;
    double cov_n_lf = 0.0;
    int truncation = 0;        // last index with non-negligible mass
};

ComSeries com_series(double theta1, double theta2) {
    // log term_n = n theta1 + theta2 log n!.
    double max_lt = 0.0; // term at n = 0
    double s = 1.0;      // sum of exp(lt - max_lt)
    double s_n = 0.0, s_lf = 0.0, s_nn = 0.0, s_lflf = 0.0, s_nlf = 0.0;
    int last = 0;
    double prev_lt = 0.0;
    bool converged = false;
    for (int n = 1; n <= kComMaxTerms; ++n) {
        const double lf = log_factorial(static_cast<unsigned>(n));
        const double lt = n * theta1 + theta2 * lf;
        if (lt > max_lt) {
            const double scale = std::exp(max_lt - lt);
            s *= scale;
            s_n *= scale;
            s_lf *= scale;
            s_nn *= scale;
            s_lflf *= scale;
            s_nlf *= scale;
            max_lt = lt;
        }
        const double w = std::exp(lt - max_lt);
        s += w;
        s_n += w * n;
        s_lf += w * lf;
        s_nn += w * double(n) * n;
        s_lflf += w * lf * lf;
        s_nlf += w * n * lf;
        last = n;
        const double ratio = std::exp(lt - prev_lt);
        prev_lt = lt;
        if (ratio < 1.0) {
            const double tail = std::exp(lt - max_lt) * ratio / (1.0 - ratio);
            if (std::exp(lt - max_lt) < 1e-16 * s && tail < 1e-14 * s) {
                converged = true;
                break;
            }
        }
    }
    if (!converged)
        throw numeric_error("CoM-Poisson series did not converge within term cap");
    ComSeries out;
    out.log_z = max_lt + std::log(s);
    out.mean_n = s_n / s;
    out.mean_lf = s_lf / s;
    out.var_n = s_nn / s - out.mean_n * out.mean_n;
    out.var_lf = s_lflf / s - out.mean_lf * out.mean_lf;
    out.cov_n_lf = s_nlf / s - out.mean_n * out.mean_lf;
    out.truncation = last;
    return out;
}

// Enumerated state probabilities of a Boltzmann machine; also used by the
// exact sampler and the backward mapping.
struct BoltzmannTable {
    std::vector<Vector> stats;  // sufficient statistics per state
    Vector log_probs;           // normalized
    double log_partition;
};

Vector boltzmann_statistic(const Vector& z, int m) {
    Vector s(m + m * (m - 1) / 2);
    s.head(m) = z;
    int idx = m;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            s(idx++) = z(i) * z(j);
    return s;
}

BoltzmannTable boltzmann_table(const Vector& theta, int m) {
    const std::size_t n_states = std::size_t(1) << m;
    BoltzmannTable t;
    t.stats.reserve(n_states);
    t.log_probs.resize(static_cast<Eigen::Index>(n_states));
    double running_max = -std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < n_states; ++b) {
        Vector z(m);
        for (int i = 0; i < m; ++i)
            z(i) = double((b >> i) & 1);
        Vector s = boltzmann_statistic(z, m);
        const double e = s.dot(theta);
        t.log_probs(static_cast<Eigen::Index>(b)) = e;
        running_max = std::max(running_max, e);
        t.stats.push_back(std::move(s));
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < t.log_probs.size(); ++i)
        acc += std::exp(t.log_probs(i) - running_max);
    t.log_partition = running_max + std::log(acc);
    t.log_probs.array() -= t.log_partition;
    return t;
}

// Precision matrix -2 Theta^sigma reconstructed from the natural coordinates
// of a multivariate normal family.
Matrix mvn_precision(const Vector& coords, int n) {
    const Matrix theta_sigma = unpack_tril_symmetric(coords.tail(n * (n + 1) / 2), n);
    return -2.0 * theta_sigma;
}

double sample_von_mises(double mu, double kappa, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (kappa < 1e-10) {
        return 2.0 * M_PI * unif(rng);
    }
    // Best & Fisher rejection from a wrapped Cauchy envelope.
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double rr = (1.0 + rho * rho) / (2.0 * rho);
    double f = 0.0;
    for (;;) {
        const double u1 = unif(rng);
        const double zz = std::cos(M_PI * u1);
        f = (1.0 + rr * zz) / (rr + zz);
        const double c = kappa * (rr - f);
        const double u2 = unif(rng);
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0)
            break;
    }
    const double u3 = unif(rng);
    double angle = mu + (u3 > 0.5 ? 1.0 : -1.0) * std::acos(f);
    angle = std::fmod(angle, 2.0 * M_PI);
    if (angle < 0.0)
        angle += 2.0 * M_PI;
    return angle;
}

} // namespace

// ---------------------------------------------------------------------------
// FamilyDescriptor

FamilyDescriptor::FamilyDescriptor(FamilyKind kind, int size,
                                   std::shared_ptr<const FamilyDescriptor> base)
    : kind_(kind), size_(size), base_(std::move(base)) {}

FamilyDescriptor FamilyDescriptor::categorical(int dk) {
    require(dk >= 1, "Categorical: need at least one nonzero state");
    return FamilyDescriptor(FamilyKind::Categorical, dk);
}

FamilyDescriptor FamilyDescriptor::poisson_product(int dn) {
    require(dn >= 1, "PoissonProduct: need at least one neuron");
    return FamilyDescriptor(FamilyKind::PoissonProduct, dn);
}

FamilyDescriptor FamilyDescriptor::multivariate_normal(int n) {
    require(n >= 1, "MultivariateNormal: dimension must be positive");
    return FamilyDescriptor(FamilyKind::MultivariateNormal, n);
}

FamilyDescriptor FamilyDescriptor::von_mises_product(int d) {
    require(d >= 1, "VonMisesProduct: dimension must be positive");
    return FamilyDescriptor(FamilyKind::VonMisesProduct, d);
}

FamilyDescriptor FamilyDescriptor::dirichlet(int d) {
    require(d >= 1, "Dirichlet: simplex dimension must be positive");
    return FamilyDescriptor(FamilyKind::Dirichlet, d);
}

FamilyDescriptor FamilyDescriptor::boltzmann(int m) {
    require(m >= 1, "Boltzmann: need at least one neuron");
    if (m > kBoltzmannMaxNeurons)
        throw budget_error("Boltzmann: neuron count exceeds exact-enumeration budget (20)");
    return FamilyDescriptor(FamilyKind::Boltzmann, m);
}

FamilyDescriptor FamilyDescriptor::com_poisson_product(int d) {
    require(d >= 1, "CoMPoissonProduct: dimension must be positive");
    return FamilyDescriptor(FamilyKind::CoMPoissonProduct, d);
}

FamilyDescriptor FamilyDescriptor::natural_prior(const FamilyDescriptor& base) {
    return FamilyDescriptor(FamilyKind::NaturalPrior, base.dimension(),
                            std::make_shared<const FamilyDescriptor>(base));
}

int FamilyDescriptor::dimension() const {
    switch (kind_) {
    case FamilyKind::Categorical:
    case FamilyKind::PoissonProduct:
        return size_;
    case FamilyKind::MultivariateNormal:
        return size_ + size_ * (size_ + 1) / 2;
    case FamilyKind::VonMisesProduct:
    case FamilyKind::CoMPoissonProduct:
        return 2 * size_;
    case FamilyKind::Dirichlet:
        return size_ + 1;
    case FamilyKind::Boltzmann:
        return size_ + size_ * (size_ - 1) / 2;
    case FamilyKind::NaturalPrior:
        return size_ + 1;
    }
    throw std::logic_error("unreachable");
}

const FamilyDescriptor& FamilyDescriptor::base() const {
    if (!base_)
        throw unsupported_error("base(): only NaturalPrior families have a base");
    return *base_;
}

std::string FamilyDescriptor::name() const {
    switch (kind_) {
    case FamilyKind::Categorical: return "categorical";
    case FamilyKind::PoissonProduct: return "poisson_product";
    case FamilyKind::MultivariateNormal: return "multivariate_normal";
    case FamilyKind::VonMisesProduct: return "von_mises_product";
    case FamilyKind::Dirichlet: return "dirichlet";
    case FamilyKind::Boltzmann: return "boltzmann";
    case FamilyKind::CoMPoissonProduct: return "com_poisson_product";
    case FamilyKind::NaturalPrior: return "natural_prior";
    }
    throw std::logic_error("unreachable");
}

bool FamilyDescriptor::operator==(const FamilyDescriptor& other) const {
    if (kind_ != other.kind_ || size_ != other.size_)
        return false;
    if (kind_ == FamilyKind::NaturalPrior)
        return base() == other.base();
    return true;
}

// ---------------------------------------------------------------------------
// Point types

NaturalPoint::NaturalPoint(FamilyDescriptor f, Vector c)
    : family(std::move(f)), coords(std::move(c)) {
    require(coords.size() == family.dimension(), "NaturalPoint: coordinate length mismatch");
    require(all_finite(coords), "NaturalPoint: coordinates must be finite");
    switch (family.kind()) {
    case FamilyKind::MultivariateNormal: {
        const Matrix p = mvn_precision(coords, family.size());
        Eigen::LLT<Matrix> llt(p);
        require(llt.info() == Eigen::Success,
                "NaturalPoint: normal precision matrix is not positive definite");
        break;
    }
    case FamilyKind::Dirichlet:
        require((coords.array() > -1.0).all(),
                "NaturalPoint: Dirichlet coordinates must exceed -1");
        break;
    default:
        break;
    }
}

MeanPoint::MeanPoint(FamilyDescriptor f, Vector c)
    : family(std::move(f)), coords(std::move(c)) {
    require(coords.size() == family.dimension(), "MeanPoint: coordinate length mismatch");
    require(all_finite(coords), "MeanPoint: coordinates must be finite");
    switch (family.kind()) {
    case FamilyKind::Categorical:
        require((coords.array() > 0.0).all() && coords.sum() < 1.0,
                "MeanPoint: categorical weights must be positive and sum below one");
        break;
    case FamilyKind::PoissonProduct:
        require((coords.array() > 0.0).all(), "MeanPoint: Poisson rates must be positive");
        break;
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Vector m = coords.head(n);
        const Matrix second = unpack_tril_symmetric(coords.tail(n * (n + 1) / 2), n);
        // unpack halves the off-diagonals; restore the raw moment matrix
        Matrix moment = second * 2.0;
        moment.diagonal() = second.diagonal();
        Eigen::LLT<Matrix> llt(moment - m * m.transpose());
        require(llt.info() == Eigen::Success,
                "MeanPoint: normal covariance is not positive definite");
        break;
    }
    default:
        break;
    }
}

Observation::Observation(FamilyDescriptor f, Vector v)
    : family(std::move(f)), value(std::move(v)) {
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        require(value.size() == 1, "Observation: categorical value is a single index");
        const double k = value(0);
        require(k == std::floor(k) && k >= 0.0 && k <= family.size(),
                "Observation: categorical index out of range");
        break;
    }
    case FamilyKind::PoissonProduct:
    case FamilyKind::CoMPoissonProduct:
        require(value.size() == family.size(), "Observation: count vector length mismatch");
        for (Eigen::Index i = 0; i < value.size(); ++i)
            require(is_count(value(i)), "Observation: counts must be nonnegative integers");
        break;
    case FamilyKind::MultivariateNormal:
        require(value.size() == family.size() && all_finite(value),
                "Observation: normal value length mismatch");
        break;
    case FamilyKind::VonMisesProduct:
        require(value.size() == family.size(), "Observation: angle vector length mismatch");
        for (Eigen::Index i = 0; i < value.size(); ++i)
            require(value(i) >= 0.0 && value(i) < 2.0 * M_PI,
                    "Observation: angles must lie in [0, 2pi)");
        break;
    case FamilyKind::Dirichlet:
        require(value.size() == family.size() + 1, "Observation: weight vector length mismatch");
        require((value.array() > 0.0).all() && std::abs(value.sum() - 1.0) < 1e-9,
                "Observation: weights must be positive and sum to one");
        break;
    case FamilyKind::Boltzmann:
        require(value.size() == family.size(), "Observation: binary vector length mismatch");
        for (Eigen::Index i = 0; i < value.size(); ++i)
            require(value(i) == 0.0 || value(i) == 1.0,
                    "Observation: Boltzmann values must be binary");
        break;
    case FamilyKind::NaturalPrior:
        require(value.size() == family.base().dimension() && all_finite(value),
                "Observation: natural-prior value length mismatch");
        // The sample space is the natural parameter space of the base family;
        // constructing the point checks its invariants.
        NaturalPoint(family.base(), value);
        break;
    }
}

// ---------------------------------------------------------------------------
// Packing helpers

Vector pack_tril(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    Vector out(n * (n + 1) / 2);
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            out(idx++) = m(i, j);
    return out;
}

Matrix unpack_tril_symmetric(const Vector& coords, int n) {
    Matrix lower = Matrix::Zero(n, n);
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            lower(i, j) = coords(idx++);
    return 0.5 * (lower + lower.transpose());
}

Vector pack_pairs(const Matrix& m) {
    const int n = static_cast<int>(m.rows());
    Vector out(n * (n - 1) / 2);
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            out(idx++) = m(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Operations

Vector sufficient_statistic(const FamilyDescriptor& family, const Observation& x) {
    require(x.family == family, "sufficient_statistic: observation family mismatch");
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        Vector s = Vector::Zero(family.size());
        const int k = static_cast<int>(x.value(0));
        if (k > 0)
            s(k - 1) = 1.0;
        return s;
    }
    case FamilyKind::PoissonProduct:
        return x.value;
    case FamilyKind::MultivariateNormal: {
        Vector s(family.dimension());
        s.head(family.size()) = x.value;
        s.tail(family.dimension() - family.size()) =
            pack_tril(x.value * x.value.transpose());
        return s;
    }
    case FamilyKind::VonMisesProduct: {
        Vector s(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            s(2 * j) = std::cos(x.value(j));
            s(2 * j + 1) = std::sin(x.value(j));
        }
        return s;
    }
    case FamilyKind::Dirichlet:
        return x.value.array().log().matrix();
    case FamilyKind::Boltzmann:
        return boltzmann_statistic(x.value, family.size());
    case FamilyKind::CoMPoissonProduct: {
        Vector s(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            s(2 * j) = x.value(j);
            s(2 * j + 1) = log_factorial(static_cast<unsigned>(x.value(j)));
        }
        return s;
    }
    case FamilyKind::NaturalPrior: {
        Vector s(family.dimension());
        s.head(family.size()) = x.value;
        s(family.size()) =
            log_partition(family.base(), NaturalPoint(family.base(), x.value));
        return s;
    }
    }
    throw std::logic_error("unreachable");
}

double log_base_measure(const FamilyDescriptor& family, const Observation& x) {
    require(x.family == family, "log_base_measure: observation family mismatch");
    switch (family.kind()) {
    case FamilyKind::Categorical:
    case FamilyKind::Dirichlet:
    case FamilyKind::Boltzmann:
    case FamilyKind::CoMPoissonProduct:
    case FamilyKind::NaturalPrior:
        return 0.0;
    case FamilyKind::PoissonProduct: {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < x.value.size(); ++i)
            acc -= log_factorial(static_cast<unsigned>(x.value(i)));
        return acc;
    }
    case FamilyKind::MultivariateNormal:
        return -0.5 * family.size() * std::log(2.0 * M_PI);
    case FamilyKind::VonMisesProduct:
        return -family.size() * std::log(2.0 * M_PI);
    }
    throw std::logic_error("unreachable");
}

double log_partition(const FamilyDescriptor& family, const NaturalPoint& theta) {
    require(theta.family == family, "log_partition: parameter family mismatch");
    const Vector& t = theta.coords;
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        const double m = std::max(0.0, t.maxCoeff());
        double acc = std::exp(-m);
        for (Eigen::Index i = 0; i < t.size(); ++i)
            acc += std::exp(t(i) - m);
        return m + std::log(acc);
    }
    case FamilyKind::PoissonProduct:
        return t.array().exp().sum();
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Matrix p = mvn_precision(t, n);
        Eigen::LLT<Matrix> llt(p);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("log_partition: normal precision not positive definite");
        const Vector tm = t.head(n);
        const double quad = 0.5 * tm.dot(llt.solve(tm));
        double log_det = 0.0;
        for (int i = 0; i < n; ++i)
            log_det += 2.0 * std::log(llt.matrixL()(i, i));
        return quad - 0.5 * log_det;
    }
    case FamilyKind::VonMisesProduct: {
        double acc = 0.0;
        for (int j = 0; j < family.size(); ++j)
            acc += log_bessel_i0(t.segment(2 * j, 2).norm());
        return acc;
    }
    case FamilyKind::Dirichlet: {
        const Eigen::ArrayXd alpha = t.array() + 1.0;
        double acc = -std::lgamma(alpha.sum());
        for (Eigen::Index i = 0; i < alpha.size(); ++i)
            acc += std::lgamma(alpha(i));
        return acc;
    }
    case FamilyKind::Boltzmann:
        return boltzmann_table(t, family.size()).log_partition;
    case FamilyKind::CoMPoissonProduct: {
        double acc = 0.0;
        for (int j = 0; j < family.size(); ++j)
            acc += com_series(t(2 * j), t(2 * j + 1)).log_z;
        return acc;
    }
    case FamilyKind::NaturalPrior:
        throw unsupported_error("log_partition: not available for natural-prior families");
    }
    throw std::logic_error("unreachable");
}

MeanPoint to_mean(const FamilyDescriptor& family, const NaturalPoint& theta) {
    require(theta.family == family, "to_mean: parameter family mismatch");
    const Vector& t = theta.coords;
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        const double psi = log_partition(family, theta);
        return MeanPoint(family, (t.array() - psi).exp().matrix());
    }
    case FamilyKind::PoissonProduct:
        return MeanPoint(family, t.array().exp().matrix());
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Matrix p = mvn_precision(t, n);
        Eigen::LLT<Matrix> llt(p);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("to_mean: normal precision not positive definite");
        const Matrix cov = llt.solve(Matrix::Identity(n, n));
        const Vector m = cov * t.head(n);
        Vector eta(family.dimension());
        eta.head(n) = m;
        eta.tail(n * (n + 1) / 2) = pack_tril(cov + m * m.transpose());
        return MeanPoint(family, eta);
    }
    case FamilyKind::VonMisesProduct: {
        Vector eta = Vector::Zero(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            const Vector pair = t.segment(2 * j, 2);
            const double r = pair.norm();
            if (r > 0.0)
                eta.segment(2 * j, 2) = (bessel_ratio_i1_i0(r) / r) * pair;
        }
        return MeanPoint(family, eta);
    }
    case FamilyKind::Dirichlet: {
        const Eigen::ArrayXd alpha = t.array() + 1.0;
        const double d0 = digamma(alpha.sum());
        Vector eta(t.size());
        for (Eigen::Index i = 0; i < t.size(); ++i)
            eta(i) = digamma(alpha(i)) - d0;
        return MeanPoint(family, eta);
    }
    case FamilyKind::Boltzmann: {
        const BoltzmannTable table = boltzmann_table(t, family.size());
        Vector eta = Vector::Zero(family.dimension());
        for (std::size_t b = 0; b < table.stats.size(); ++b)
            eta += std::exp(table.log_probs(static_cast<Eigen::Index>(b))) * table.stats[b];
        return MeanPoint(family, eta);
    }
    case FamilyKind::CoMPoissonProduct: {
        Vector eta(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            const ComSeries s = com_series(t(2 * j), t(2 * j + 1));
            eta(2 * j) = s.mean_n;
            eta(2 * j + 1) = s.mean_lf;
        }
        return MeanPoint(family, eta);
    }
    case FamilyKind::NaturalPrior:
        throw unsupported_error("to_mean: not available for natural-prior families");
    }
    throw std::logic_error("unreachable");
}

namespace {

// Damped Newton solve of tau(theta) = eta for families whose forward mapping
// and Fisher information come from exact accumulation.
Vector newton_backward(const FamilyDescriptor& family, const Vector& target,
                       Vector theta,
                       const std::function<void(const Vector&, Vector&, Matrix&)>& moments,
                       int max_iters, const char* label) {
    const Eigen::Index d = target.size();
    Vector mean(d);
    Matrix cov(d, d);
    for (int it = 0; it < max_iters; ++it) {
        moments(theta, mean, cov);
        const Vector g = mean - target;
        if (g.cwiseAbs().maxCoeff() < 1e-12)
            return theta;
        Matrix j = cov;
        j.diagonal().array() += 1e-12;
        Vector step = j.ldlt().solve(g);
        // Backtracking on the residual norm.
        double alpha = 1.0;
        const double g0 = g.norm();
        for (int bt = 0; bt < 60; ++bt) {
            Vector cand = theta - alpha * step;
            try {
                moments(cand, mean, cov);
                if ((mean - target).norm() < g0) {
                    theta = std::move(cand);
                    break;
                }
            } catch (const numeric_error&) {
                // shrink and retry
            }
            alpha *= 0.5;
            if (bt == 59)
                throw numeric_error(std::string(label) +
                                    ": Newton line search failed at iteration " +
                                    std::to_string(it));
        }
    }
    moments(theta, mean, cov);
    if ((mean - target).cwiseAbs().maxCoeff() < 1e-9)
        return theta;
    throw numeric_error(std::string(label) + ": Newton failed to converge after " +
                        std::to_string(max_iters) + " iterations");
}

} // namespace

NaturalPoint to_natural(const FamilyDescriptor& family, const MeanPoint& eta) {
    require(eta.family == family, "to_natural: parameter family mismatch");
    const Vector& e = eta.coords;
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        const double rest = 1.0 - e.sum();
        return NaturalPoint(family, (e.array() / rest).log().matrix());
    }
    case FamilyKind::PoissonProduct:
        return NaturalPoint(family, e.array().log().matrix());
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Vector m = e.head(n);
        const Matrix half = unpack_tril_symmetric(e.tail(n * (n + 1) / 2), n);
        Matrix moment = half * 2.0;
        moment.diagonal() = half.diagonal();
        const Matrix cov = moment - m * m.transpose();
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success)
            throw std::domain_error("to_natural: covariance not positive definite");
        const Matrix prec = llt.solve(Matrix::Identity(n, n));
        Vector theta(family.dimension());
        theta.head(n) = prec * m;
        Matrix theta_sigma_packed(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j)
                theta_sigma_packed(i, j) = (i == j) ? -0.5 * prec(i, i) : -prec(i, j);
        theta.tail(n * (n + 1) / 2) = pack_tril(theta_sigma_packed);
        return NaturalPoint(family, theta);
    }
    case FamilyKind::VonMisesProduct: {
        Vector theta = Vector::Zero(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            const Vector pair = e.segment(2 * j, 2);
            const double big_r = pair.norm();
            if (big_r >= 1.0)
                throw std::domain_error("to_natural: von Mises mean norm must be below one");
            if (big_r > 0.0) {
                const double r = inverse_bessel_ratio(big_r);
                theta.segment(2 * j, 2) = (r / big_r) * pair;
            }
        }
        return NaturalPoint(family, theta);
    }
    case FamilyKind::Dirichlet: {
        const Eigen::Index d = e.size();
        // Minka's fixed point, then Newton polish.
        Vector alpha = Vector::Ones(d);
        for (int it = 0; it < 200; ++it) {
            const double d0 = digamma(alpha.sum());
            Vector next(d);
            for (Eigen::Index i = 0; i < d; ++i)
                next(i) = inverse_digamma(e(i) + d0);
            if ((next - alpha).cwiseAbs().maxCoeff() < 1e-12) {
                alpha = next;
                break;
            }
            alpha = next;
        }
        for (int it = 0; it < 100; ++it) {
            const double s = alpha.sum();
            const double t0 = trigamma(s);
            Vector g(d);
            Vector q(d);
            for (Eigen::Index i = 0; i < d; ++i) {
                g(i) = digamma(alpha(i)) - digamma(s) - e(i);
                q(i) = trigamma(alpha(i));
            }
            // J = diag(q) - t0 11^T; Sherman-Morrison solve.
            const Vector ginv = g.array() / q.array();
            const double b = t0 * ginv.sum() / (1.0 - t0 * (1.0 / q.array()).sum());
            Vector step = ginv.array() + b / q.array();
            double damp = 1.0;
            while (((alpha - damp * step).array() <= 0.0).any())
                damp *= 0.5;
            alpha -= damp * step;
            if (step.cwiseAbs().maxCoeff() * damp < 1e-13)
                break;
        }
        return NaturalPoint(family, alpha.array() - 1.0);
    }
    case FamilyKind::Boltzmann: {
        const int m = family.size();
        auto moments = std::function<void(const Vector&, Vector&, Matrix&)>(
            [&](const Vector& theta, Vector& mean, Matrix& cov) {
                const BoltzmannTable table = boltzmann_table(theta, m);
                mean.setZero();
                cov.setZero();
                for (std::size_t b = 0; b < table.stats.size(); ++b) {
                    const double w = std::exp(table.log_probs(static_cast<Eigen::Index>(b)));
                    mean += w * table.stats[b];
                    cov += w * table.stats[b] * table.stats[b].transpose();
                }
                cov -= mean * mean.transpose();
            });
        Vector theta = newton_backward(family, e, Vector::Zero(family.dimension()), moments,
                                       200, "Boltzmann to_natural");
        return NaturalPoint(family, theta);
    }
    case FamilyKind::CoMPoissonProduct: {
        Vector theta(2 * family.size());
        for (int j = 0; j < family.size(); ++j) {
            const Vector target = e.segment(2 * j, 2);
            auto moments = std::function<void(const Vector&, Vector&, Matrix&)>(
                [](const Vector& th, Vector& mean, Matrix& cov) {
                    const ComSeries s = com_series(th(0), th(1));
                    mean.resize(2);
                    cov.resize(2, 2);
                    mean << s.mean_n, s.mean_lf;
                    cov << s.var_n, s.cov_n_lf, s.cov_n_lf, s.var_lf;
                });
            Vector init(2);
            init << std::log(std::max(target(0), 1e-8)), -1.0; // Poisson start
            theta.segment(2 * j, 2) =
                newton_backward(family, target, init, moments, 200, "CoM to_natural");
        }
        return NaturalPoint(family, theta);
    }
    case FamilyKind::NaturalPrior:
        throw unsupported_error("to_natural: not available for natural-prior families");
    }
    throw std::logic_error("unreachable");
}

double log_density(const FamilyDescriptor& family, const NaturalPoint& theta,
                   const Observation& x) {
    return sufficient_statistic(family, x).dot(theta.coords) -
           log_partition(family, theta) + log_base_measure(family, x);
}

std::vector<Observation> sample(const FamilyDescriptor& family, const NaturalPoint& theta,
                                std::uint64_t rng_seed, int count) {
    require(theta.family == family, "sample: parameter family mismatch");
    require(count >= 0, "sample: count must be nonnegative");
    Rng rng(rng_seed);
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(count));
    const Vector& t = theta.coords;
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        const double psi = log_partition(family, theta);
        Vector cdf(family.size() + 1);
        cdf(0) = std::exp(-psi);
        for (int i = 0; i < family.size(); ++i)
            cdf(i + 1) = cdf(i) + std::exp(t(i) - psi);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < count; ++s) {
            const double u = unif(rng);
            int k = 0;
            while (k < family.size() && u > cdf(k))
                ++k;
            out.emplace_back(family, Vector::Constant(1, double(k)));
        }
        break;
    }
    case FamilyKind::PoissonProduct: {
        for (int s = 0; s < count; ++s) {
            Vector v(family.size());
            for (int i = 0; i < family.size(); ++i) {
                std::poisson_distribution<long> pois(std::exp(t(i)));
                v(i) = double(pois(rng));
            }
            out.emplace_back(family, std::move(v));
        }
        break;
    }
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Matrix p = mvn_precision(t, n);
        Eigen::LLT<Matrix> llt(p);
        const Matrix cov = llt.solve(Matrix::Identity(n, n));
        const Vector m = cov * t.head(n);
        Eigen::LLT<Matrix> cov_llt(cov);
        const Matrix l = cov_llt.matrixL();
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int s = 0; s < count; ++s) {
            Vector z(n);
            for (int i = 0; i < n; ++i)
                z(i) = normal(rng);
            out.emplace_back(family, Vector(m + l * z));
        }
        break;
    }
    case FamilyKind::VonMisesProduct: {
        for (int s = 0; s < count; ++s) {
            Vector v(family.size());
            for (int j = 0; j < family.size(); ++j) {
                const Vector pair = t.segment(2 * j, 2);
                const double kappa = pair.norm();
                const double mu = std::atan2(pair(1), pair(0));
                v(j) = sample_von_mises(mu, kappa, rng);
            }
            out.emplace_back(family, std::move(v));
        }
        break;
    }
    case FamilyKind::Dirichlet: {
        for (int s = 0; s < count; ++s) {
            Vector v(t.size());
            for (Eigen::Index i = 0; i < t.size(); ++i) {
                std::gamma_distribution<double> gamma(t(i) + 1.0, 1.0);
                v(i) = std::max(gamma(rng), 1e-300);
            }
            v /= v.sum();
            out.emplace_back(family, std::move(v));
        }
        break;
    }
    case FamilyKind::Boltzmann: {
        const int m = family.size();
        const BoltzmannTable table = boltzmann_table(t, m);
        Vector cdf(table.log_probs.size());
        double acc = 0.0;
        for (Eigen::Index i = 0; i < table.log_probs.size(); ++i) {
            acc += std::exp(table.log_probs(i));
            cdf(i) = acc;
        }
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < count; ++s) {
            const double u = unif(rng);
            Eigen::Index b = 0;
            while (b + 1 < cdf.size() && u > cdf(b))
                ++b;
            Vector z(m);
            for (int i = 0; i < m; ++i)
                z(i) = double((b >> i) & 1);
            out.emplace_back(family, std::move(z));
        }
        break;
    }
    case FamilyKind::CoMPoissonProduct: {
        // Exact inverse-CDF over the truncated support used by the series.
        std::vector<std::vector<double>> cdfs(family.size());
        for (int j = 0; j < family.size(); ++j) {
            const ComSeries s = com_series(t(2 * j), t(2 * j + 1));
            std::vector<double>& cdf = cdfs[j];
            cdf.resize(static_cast<std::size_t>(s.truncation) + 1);
            double acc = 0.0;
            for (int n = 0; n <= s.truncation; ++n) {
                const double lt = n * t(2 * j) +
                                  t(2 * j + 1) * log_factorial(static_cast<unsigned>(n)) -
                                  s.log_z;
                acc += std::exp(lt);
                cdf[static_cast<std::size_t>(n)] = acc;
            }
        }
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (int s = 0; s < count; ++s) {
            Vector v(family.size());
            for (int j = 0; j < family.size(); ++j) {
                const double u = unif(rng);
                const auto& cdf = cdfs[j];
                std::size_t n = 0;
                while (n + 1 < cdf.size() && u > cdf[n])
                    ++n;
                v(j) = double(n);
            }
            out.emplace_back(family, std::move(v));
        }
        break;
    }
    case FamilyKind::NaturalPrior:
        throw unsupported_error("sample: not available for natural-prior families");
    }
    return out;
}

std::vector<Observation> enumerate_support(const FamilyDescriptor& family) {
    switch (family.kind()) {
    case FamilyKind::Categorical: {
        std::vector<Observation> states;
        for (int k = 0; k <= family.size(); ++k)
            states.emplace_back(family, Vector::Constant(1, double(k)));
        return states;
    }
    case FamilyKind::Boltzmann: {
        const int m = family.size();
        std::vector<Observation> states;
        const std::size_t n_states = std::size_t(1) << m;
        states.reserve(n_states);
        for (std::size_t b = 0; b < n_states; ++b) {
            Vector z(m);
            for (int i = 0; i < m; ++i)
                z(i) = double((b >> i) & 1);
            states.emplace_back(family, std::move(z));
        }
        return states;
    }
    default:
        throw unsupported_error("enumerate_support: family has no finite support");
    }
}

} // namespace harmoniums
