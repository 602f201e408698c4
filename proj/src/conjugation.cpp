#include "harmoniums/conjugation.hpp"

#include <cmath>
#include <stdexcept>

#include "harmoniums/errors.hpp"

namespace harmoniums {

namespace {

bool has_second_order_statistic(const FamilyDescriptor& f) {
    return f.kind() == FamilyKind::MultivariateNormal || f.kind() == FamilyKind::Boltzmann;
}

} // namespace

Vector pack_tril_quadratic(const Matrix& p) {
    const int n = static_cast<int>(p.rows());
    Vector out(n * (n + 1) / 2);
    int idx = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            out(idx++) = (i == j) ? p(i, i) : 2.0 * p(i, j);
    return out;
}

ConjugationParams categorical_conjugation(const Harmonium& h) {
    if (h.lat.kind() != FamilyKind::Categorical)
        throw unsupported_error("categorical_conjugation: latent family must be categorical");
    ConjugationParams c;
    c.chi = log_partition(h.obs, h.theta_x);
    c.rho.resize(h.lat.dimension());
    for (int i = 0; i < h.lat.dimension(); ++i) {
        const NaturalPoint shifted(h.obs, h.theta_x.coords + h.theta_xz.col(i));
        c.rho(i) = log_partition(h.obs, shifted) - c.chi;
    }
    return c;
}

ConjugationParams linear_gaussian_conjugation(const Harmonium& h) {
    if (h.obs.kind() != FamilyKind::MultivariateNormal)
        throw unsupported_error(
            "linear_gaussian_conjugation: observable family must be multivariate normal");
    if (!has_second_order_statistic(h.lat))
        throw unsupported_error(
            "linear_gaussian_conjugation: latent statistic must carry a second-order block");
    const int n = h.obs.size();
    const int m = h.lat.size();
    // Only the mean-block corner of the interaction matrix may be nonzero.
    if (!h.theta_xz.bottomRows(h.obs.dimension() - n).isZero(0.0) ||
        !h.theta_xz.rightCols(h.lat.dimension() - m).isZero(0.0))
        throw std::domain_error(
            "linear_gaussian_conjugation: interactions outside the mean blocks must be zero");

    const Matrix w = h.theta_xz.topLeftCorner(n, m);
    const Matrix theta_sigma =
        unpack_tril_symmetric(h.theta_x.coords.tail(n * (n + 1) / 2), n);
    const Matrix precision = -2.0 * theta_sigma;
    Eigen::LLT<Matrix> llt(precision);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("linear_gaussian_conjugation: singular observable precision");
    const Vector theta_m = h.theta_x.coords.head(n);

    ConjugationParams c;
    c.chi = log_partition(h.obs, h.theta_x);
    const Vector rho_m = w.transpose() * llt.solve(theta_m);
    const Matrix p_sigma = 0.5 * w.transpose() * llt.solve(w);

    c.rho = Vector::Zero(h.lat.dimension());
    if (h.lat.kind() == FamilyKind::MultivariateNormal) {
        c.rho.head(m) = rho_m;
        c.rho.tail(m * (m + 1) / 2) = pack_tril_quadratic(p_sigma);
    } else {
        // Boltzmann: z_i^2 = z_i folds the diagonal into the linear block;
        // each unordered pair appears once in the statistic.
        c.rho.head(m) = rho_m + p_sigma.diagonal();
        c.rho.tail(m * (m - 1) / 2) = 2.0 * pack_pairs(p_sigma);
    }
    return c;
}

std::pair<ConjugationParams, double>
fit_conjugation(const Harmonium& h, const std::vector<Observation>& z_probes) {
    const int d = h.lat.dimension();
    const int n_probes = static_cast<int>(z_probes.size());
    if (n_probes < d + 1)
        throw std::domain_error("fit_conjugation: need at least dim+1 probes");
    Matrix design(n_probes, d + 1);
    Vector target(n_probes);
    for (int i = 0; i < n_probes; ++i) {
        design.row(i).head(d) = sufficient_statistic(h.lat, z_probes[i]).transpose();
        design(i, d) = 1.0;
        target(i) = log_partition(h.obs, likelihood_params(h, z_probes[i]));
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < d + 1)
        throw numeric_error("fit_conjugation: probe design matrix is rank deficient");
    // Normal equations with a small Tikhonov jitter; probe designs can be
    // near-degenerate.
    Matrix gram = design.transpose() * design;
    gram.diagonal().array() += 1e-12;
    const Vector beta = gram.ldlt().solve(design.transpose() * target);
    ConjugationParams c;
    c.rho = beta.head(d);
    c.chi = beta(d);
    const double residual = (target - design * beta).cwiseAbs().maxCoeff();
    return {std::move(c), residual};
}

double verify_conjugation(const Harmonium& h, const ConjugationParams& c,
                          const std::vector<Observation>& z_probes) {
    double worst = 0.0;
    for (const Observation& z : z_probes) {
        const double lhs = log_partition(h.obs, likelihood_params(h, z));
        const double rhs = sufficient_statistic(h.lat, z).dot(c.rho) + c.chi;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

std::pair<Harmonium, ConjugationParams>
bayes_estimation_harmonium(const FamilyDescriptor& obs) {
    const FamilyDescriptor lat = FamilyDescriptor::natural_prior(obs);
    const int d = obs.dimension();
    Matrix theta_xz = Matrix::Zero(d, d + 1);
    theta_xz.topLeftCorner(d, d).setIdentity();
    Harmonium h(obs, lat, NaturalPoint(obs, Vector::Zero(d)),
                NaturalPoint(lat, Vector::Zero(d + 1)), std::move(theta_xz));
    ConjugationParams c;
    c.rho = Vector::Zero(d + 1);
    c.rho(d) = 1.0;
    c.chi = 0.0;
    return {std::move(h), std::move(c)};
}

std::pair<Harmonium, ConjugationParams> dirichlet_categorical_harmonium(int d) {
    const FamilyDescriptor obs = FamilyDescriptor::categorical(d);
    const FamilyDescriptor lat = FamilyDescriptor::dirichlet(d);
    Matrix theta_xz = Matrix::Zero(d, d + 1);
    theta_xz.col(0).setConstant(-1.0);
    theta_xz.topRightCorner(d, d).setIdentity();
    ConjugationParams c;
    c.rho = Vector::Zero(d + 1);
    c.rho(0) = -1.0;
    c.chi = 0.0;
    // theta_z offsets rho so the conjugated prior is Dirichlet(1, ..., 1);
    // callers shift it to change the prior pseudo-counts.
    Harmonium h(obs, lat, NaturalPoint(obs, Vector::Zero(d)),
                NaturalPoint(lat, -c.rho), std::move(theta_xz));
    return {std::move(h), std::move(c)};
}

std::pair<Harmonium, ConjugationParams>
mixture_from_components(const Vector& weights, const std::vector<NaturalPoint>& components) {
    const int dk = static_cast<int>(weights.size()) - 1;
    if (dk < 1)
        throw std::domain_error("mixture_from_components: need at least two components");
    if ((weights.array() <= 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9)
        throw std::domain_error(
            "mixture_from_components: weights must be positive and sum to one");
    if (static_cast<int>(components.size()) != dk + 1)
        throw std::domain_error("mixture_from_components: component count mismatch");
    const FamilyDescriptor obs = components[0].family;
    const FamilyDescriptor lat = FamilyDescriptor::categorical(dk);
    Matrix theta_xz(obs.dimension(), dk);
    for (int k = 1; k <= dk; ++k) {
        if (components[static_cast<std::size_t>(k)].family != obs)
            throw std::domain_error("mixture_from_components: component family mismatch");
        theta_xz.col(k - 1) =
            components[static_cast<std::size_t>(k)].coords - components[0].coords;
    }
    Harmonium staged(obs, lat, components[0], NaturalPoint(lat, Vector::Zero(dk)), theta_xz);
    ConjugationParams c = categorical_conjugation(staged);
    Vector theta_k(dk);
    for (int k = 1; k <= dk; ++k)
        theta_k(k - 1) = std::log(weights(k)) - std::log(weights(0)) - c.rho(k - 1);
    Harmonium h(obs, lat, components[0], NaturalPoint(lat, std::move(theta_k)),
                std::move(theta_xz));
    return {std::move(h), std::move(c)};
}

std::pair<Harmonium, ConjugationParams>
lgm_from_moments(const Vector& m_x, const Matrix& sigma_x, const Matrix& w,
                 const Vector& m_z, const Matrix& sigma_z) {
    const int n = static_cast<int>(m_x.size());
    const int m = static_cast<int>(m_z.size());
    if (sigma_x.rows() != n || sigma_x.cols() != n || sigma_z.rows() != m ||
        sigma_z.cols() != m || w.rows() != n || w.cols() != m)
        throw std::domain_error("lgm_from_moments: shape mismatch");
    Eigen::LLT<Matrix> llt_x(sigma_x);
    Eigen::LLT<Matrix> llt_z(sigma_z);
    if (llt_x.info() != Eigen::Success || llt_z.info() != Eigen::Success)
        throw std::domain_error("lgm_from_moments: covariances must be positive definite");

    const FamilyDescriptor obs = FamilyDescriptor::multivariate_normal(n);
    const FamilyDescriptor lat = FamilyDescriptor::multivariate_normal(m);

    const Matrix prec_x = llt_x.solve(Matrix::Identity(n, n));
    const Matrix prec_z = llt_z.solve(Matrix::Identity(m, m));
    const Matrix w_nat = prec_x * w;

    Vector theta_x(obs.dimension());
    theta_x.head(n) = prec_x * m_x;
    theta_x.tail(n * (n + 1) / 2) = pack_tril_quadratic(-0.5 * prec_x);

    Matrix theta_xz = Matrix::Zero(obs.dimension(), lat.dimension());
    theta_xz.topLeftCorner(n, m) = w_nat;

    // Conjugation parameters from the observable side of the model.
    const Vector rho_m = w_nat.transpose() * (sigma_x * theta_x.head(n));
    const Matrix p_sigma = 0.5 * w_nat.transpose() * sigma_x * w_nat;

    Vector theta_z(lat.dimension());
    theta_z.head(m) = prec_z * m_z - rho_m;
    theta_z.tail(m * (m + 1) / 2) = pack_tril_quadratic(-0.5 * prec_z - p_sigma);

    Harmonium h(obs, lat, NaturalPoint(obs, std::move(theta_x)),
                NaturalPoint(lat, std::move(theta_z)), std::move(theta_xz));
    ConjugationParams c = linear_gaussian_conjugation(h);
    return {std::move(h), std::move(c)};
}

} // namespace harmoniums
