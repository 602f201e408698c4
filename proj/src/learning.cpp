#include "harmoniums/learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/errors.hpp"
#include "harmoniums/special.hpp"

namespace harmoniums {

namespace {

Vector vec_row_major(const Matrix& m) {
    Vector out(m.size());
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            out(idx++) = m(i, j);
    return out;
}

Matrix mat_row_major(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    Matrix out(rows, cols);
    Eigen::Index idx = 0;
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = v(idx++);
    return out;
}

// Flat statistic of one joint sample, matching the parameter layout.
Vector flat_statistic(const Harmonium& h, const Observation& x, const Observation& z) {
    const Vector sx = sufficient_statistic(h.obs, x);
    const Vector sz = sufficient_statistic(h.lat, z);
    Vector out(sx.size() + sz.size() + sx.size() * sz.size());
    out.head(sx.size()) = sx;
    out.segment(sx.size(), sz.size()) = sz;
    out.tail(sx.size() * sz.size()) = vec_row_major(sx * sz.transpose());
    return out;
}

Vector flat_conditional(const Harmonium& h, const Observation& x) {
    const ConditionalMoments cm = conditional_expectations(h, x);
    Vector out(cm.obs_statistic.size() + cm.latent_mean.size() + cm.interaction.size());
    out.head(cm.obs_statistic.size()) = cm.obs_statistic;
    out.segment(cm.obs_statistic.size(), cm.latent_mean.size()) = cm.latent_mean;
    out.tail(cm.interaction.size()) = vec_row_major(cm.interaction);
    return out;
}

// Joint Gaussian moments of a linear Gaussian harmonium.
struct GaussianJoint {
    Vector mean;
    Matrix cov;
};

GaussianJoint lgm_joint(const Harmonium& h, const ConjugationParams& c) {
    const int n = h.obs.size();
    const int m = h.lat.size();
    const Matrix theta_sigma_x =
        unpack_tril_symmetric(h.theta_x.coords.tail(n * (n + 1) / 2), n);
    Eigen::LLT<Matrix> llt(Matrix(-2.0 * theta_sigma_x));
    const Matrix sigma_x = llt.solve(Matrix::Identity(n, n));
    const Vector bias = sigma_x * h.theta_x.coords.head(n);
    const Matrix w = sigma_x * h.theta_xz.topLeftCorner(n, m);

    const MeanPoint prior = to_mean(h.lat, prior_params(h, c));
    const Vector m_z = prior.coords.head(m);
    Matrix second = unpack_tril_symmetric(prior.coords.tail(m * (m + 1) / 2), m);
    Matrix moment = second * 2.0;
    moment.diagonal() = second.diagonal();
    const Matrix sigma_z = moment - m_z * m_z.transpose();

    GaussianJoint out;
    out.mean.resize(n + m);
    out.mean.head(n) = bias + w * m_z;
    out.mean.tail(m) = m_z;
    out.cov.resize(n + m, n + m);
    out.cov.topLeftCorner(n, n) = sigma_x + w * sigma_z * w.transpose();
    out.cov.topRightCorner(n, m) = w * sigma_z;
    out.cov.bottomLeftCorner(m, n) = (w * sigma_z).transpose();
    out.cov.bottomRightCorner(m, m) = sigma_z;
    return out;
}

// Gaussian product moments up to fourth order (Isserlis with means).
double gaussian_moment(const GaussianJoint& g, const std::vector<int>& idx) {
    const Vector& mu = g.mean;
    const Matrix& c = g.cov;
    switch (idx.size()) {
    case 1:
        return mu(idx[0]);
    case 2:
        return c(idx[0], idx[1]) + mu(idx[0]) * mu(idx[1]);
    case 3: {
        const int a = idx[0], b = idx[1], d = idx[2];
        return mu(a) * mu(b) * mu(d) + mu(a) * c(b, d) + mu(b) * c(a, d) + mu(d) * c(a, b);
    }
    case 4: {
        const int a = idx[0], b = idx[1], d = idx[2], e = idx[3];
        return mu(a) * mu(b) * mu(d) * mu(e) + c(a, b) * mu(d) * mu(e) +
               c(a, d) * mu(b) * mu(e) + c(a, e) * mu(b) * mu(d) +
               c(b, d) * mu(a) * mu(e) + c(b, e) * mu(a) * mu(d) +
               c(d, e) * mu(a) * mu(b) + c(a, b) * c(d, e) + c(a, d) * c(b, e) +
               c(a, e) * c(b, d);
    }
    default:
        throw std::logic_error("gaussian_moment: unsupported order");
    }
}

// Monomial index lists of the multivariate normal statistic layout.
std::vector<std::vector<int>> mvn_statistic_monomials(int n, int offset) {
    std::vector<std::vector<int>> out;
    for (int i = 0; i < n; ++i)
        out.push_back({offset + i});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
            out.push_back({offset + i, offset + j});
    return out;
}

Vector mean_from_gaussian(const GaussianJoint& g, int n, int offset) {
    const auto monos = mvn_statistic_monomials(n, offset);
    Vector out(monos.size());
    for (std::size_t i = 0; i < monos.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = gaussian_moment(g, monos[i]);
    return out;
}

void project_family_block(const FamilyDescriptor& family, Eigen::Ref<Vector> block) {
    switch (family.kind()) {
    case FamilyKind::MultivariateNormal: {
        const int n = family.size();
        const Matrix theta_sigma = unpack_tril_symmetric(block.tail(n * (n + 1) / 2), n);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(theta_sigma);
        if (eig.eigenvalues().maxCoeff() > -1e-6) {
            const Vector clipped = eig.eigenvalues().cwiseMin(-1e-6);
            const Matrix fixed =
                eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
            block.tail(n * (n + 1) / 2) = pack_tril_quadratic(fixed);
        }
        break;
    }
    case FamilyKind::Dirichlet:
        block = block.cwiseMax(-1.0 + 1e-8);
        break;
    case FamilyKind::CoMPoissonProduct:
        // Keep the shape coordinate -nu away from the divergence boundary.
        for (int j = 0; j < family.size(); ++j)
            block(2 * j + 1) = std::min(block(2 * j + 1), -0.05);
        break;
    default:
        break;
    }
}

Vector project_valid(const FamilyDescriptor& obs, const FamilyDescriptor& lat, Vector flat) {
    const int dx = obs.dimension();
    const int dz = lat.dimension();
    project_family_block(obs, flat.head(dx));
    project_family_block(lat, flat.segment(dx, dz));
    return flat;
}

bool latent_enumerable(const FamilyDescriptor& lat) {
    return lat.kind() == FamilyKind::Categorical || lat.kind() == FamilyKind::Boltzmann;
}

} // namespace

Vector pack_parameters(const Harmonium& h) {
    Vector out(h.obs.dimension() + h.lat.dimension() + h.theta_xz.size());
    out.head(h.obs.dimension()) = h.theta_x.coords;
    out.segment(h.obs.dimension(), h.lat.dimension()) = h.theta_z.coords;
    out.tail(h.theta_xz.size()) = vec_row_major(h.theta_xz);
    return out;
}

Harmonium unpack_parameters(const FamilyDescriptor& obs, const FamilyDescriptor& lat,
                            const Vector& flat) {
    const int dx = obs.dimension();
    const int dz = lat.dimension();
    if (flat.size() != dx + dz + dx * dz)
        throw std::domain_error("unpack_parameters: flat length mismatch");
    return Harmonium(obs, lat, NaturalPoint(obs, flat.head(dx)),
                     NaturalPoint(lat, flat.segment(dx, dz)),
                     mat_row_major(flat.tail(dx * dz), dx, dz));
}

Vector pack_triple(const MeanTriple& t) {
    Vector out(t.eta_x.size() + t.eta_z.size() + t.interaction.size());
    out.head(t.eta_x.size()) = t.eta_x;
    out.segment(t.eta_x.size(), t.eta_z.size()) = t.eta_z;
    out.tail(t.interaction.size()) = vec_row_major(t.interaction);
    return out;
}

ConjugationParams conjugation_for(const Harmonium& h, ModelClass model_class) {
    switch (model_class) {
    case ModelClass::Mixture:
        return categorical_conjugation(h);
    case ModelClass::LinearGaussian:
    case ModelClass::GaussianBoltzmann:
        return linear_gaussian_conjugation(h);
    }
    throw std::logic_error("unreachable");
}

double cross_entropy(const Harmonium& h, const ConjugationParams& c,
                     const std::vector<Observation>& data) {
    if (data.empty())
        throw std::domain_error("cross_entropy: empty dataset");
    double acc = 0.0;
    for (const Observation& x : data)
        acc -= observable_log_density(h, c, x);
    return acc / static_cast<double>(data.size());
}

MeanTriple e_step(const Harmonium& h, const std::vector<Observation>& data) {
    if (data.empty())
        throw std::domain_error("e_step: empty dataset");
    MeanTriple out;
    out.eta_x = Vector::Zero(h.obs.dimension());
    out.eta_z = Vector::Zero(h.lat.dimension());
    out.interaction = Matrix::Zero(h.obs.dimension(), h.lat.dimension());
    for (const Observation& x : data) {
        const ConditionalMoments cm = conditional_expectations(h, x);
        out.eta_x += cm.obs_statistic;
        out.eta_z += cm.latent_mean;
        out.interaction += cm.interaction;
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    out.eta_x *= inv;
    out.eta_z *= inv;
    out.interaction *= inv;
    return out;
}

Harmonium m_step_exact(ModelClass model_class, const FamilyDescriptor& obs,
                       const FamilyDescriptor& lat, const MeanTriple& averaged) {
    switch (model_class) {
    case ModelClass::Mixture: {
        const int dk = lat.size();
        Vector weights(dk + 1);
        weights.tail(dk) = averaged.eta_z;
        weights(0) = 1.0 - averaged.eta_z.sum();
        if ((weights.array() < 1e-12).any())
            throw std::domain_error("m_step_exact: degenerate mixture component weight");
        std::vector<NaturalPoint> components;
        components.reserve(static_cast<std::size_t>(dk) + 1);
        Vector base_stat = averaged.eta_x;
        for (int k = 0; k < dk; ++k)
            base_stat -= averaged.interaction.col(k);
        components.emplace_back(to_natural(obs, MeanPoint(obs, base_stat / weights(0))));
        for (int k = 0; k < dk; ++k)
            components.emplace_back(
                to_natural(obs, MeanPoint(obs, averaged.interaction.col(k) / weights(k + 1))));
        return mixture_from_components(weights, components).first;
    }
    case ModelClass::LinearGaussian: {
        const int n = obs.size();
        const int m = lat.size();
        const Vector mean_x = averaged.eta_x.head(n);
        Matrix half_x = unpack_tril_symmetric(averaged.eta_x.tail(n * (n + 1) / 2), n);
        Matrix moment_x = half_x * 2.0;
        moment_x.diagonal() = half_x.diagonal();
        const Vector mean_z = averaged.eta_z.head(m);
        Matrix half_z = unpack_tril_symmetric(averaged.eta_z.tail(m * (m + 1) / 2), m);
        Matrix moment_z = half_z * 2.0;
        moment_z.diagonal() = half_z.diagonal();
        const Matrix moment_xz = averaged.interaction.topLeftCorner(n, m);

        const Matrix sigma_z = moment_z - mean_z * mean_z.transpose();
        const Matrix cov_xz = moment_xz - mean_x * mean_z.transpose();
        Eigen::LLT<Matrix> llt_z(sigma_z);
        if (llt_z.info() != Eigen::Success)
            throw std::domain_error("m_step_exact: latent covariance not positive definite");
        const Matrix w = llt_z.solve(cov_xz.transpose()).transpose();
        const Vector bias = mean_x - w * mean_z;
        const Matrix sigma_x =
            (moment_x - mean_x * mean_x.transpose()) - w * sigma_z * w.transpose();
        return lgm_from_moments(bias, sigma_x, w, mean_z, sigma_z).first;
    }
    case ModelClass::GaussianBoltzmann:
        throw unsupported_error(
            "m_step_exact: no closed-form backward mapping for this model class");
    }
    throw std::logic_error("unreachable");
}

MeanTriple model_expectations(const Harmonium& h, ModelClass model_class) {
    const ConjugationParams c = conjugation_for(h, model_class);
    MeanTriple out;
    if (latent_enumerable(h.lat)) {
        const NaturalPoint prior = prior_params(h, c);
        const double psi_z = log_partition(h.lat, prior);
        out.eta_x = Vector::Zero(h.obs.dimension());
        out.eta_z = Vector::Zero(h.lat.dimension());
        out.interaction = Matrix::Zero(h.obs.dimension(), h.lat.dimension());
        for (const Observation& z : enumerate_support(h.lat)) {
            const Vector sz = sufficient_statistic(h.lat, z);
            const double weight = std::exp(sz.dot(prior.coords) - psi_z);
            const Vector obs_mean = to_mean(h.obs, likelihood_params(h, z)).coords;
            out.eta_x += weight * obs_mean;
            out.eta_z += weight * sz;
            out.interaction += weight * obs_mean * sz.transpose();
        }
        return out;
    }
    if (model_class == ModelClass::LinearGaussian) {
        const int n = h.obs.size();
        const int m = h.lat.size();
        const GaussianJoint joint = lgm_joint(h, c);
        out.eta_x = mean_from_gaussian(joint, n, 0);
        out.eta_z = mean_from_gaussian(joint, m, n);
        const auto obs_monos = mvn_statistic_monomials(n, 0);
        const auto lat_monos = mvn_statistic_monomials(m, n);
        out.interaction.resize(h.obs.dimension(), h.lat.dimension());
        for (std::size_t i = 0; i < obs_monos.size(); ++i)
            for (std::size_t j = 0; j < lat_monos.size(); ++j) {
                std::vector<int> idx = obs_monos[i];
                idx.insert(idx.end(), lat_monos[j].begin(), lat_monos[j].end());
                out.interaction(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    gaussian_moment(joint, idx);
            }
        return out;
    }
    throw unsupported_error(
        "model_expectations: latent expectations not computable in closed form; "
        "use a Monte Carlo algorithm");
}

MeanTriple ce_gradients(const Harmonium& h, ModelClass model_class,
                        const std::vector<Observation>& data) {
    const MeanTriple model = model_expectations(h, model_class);
    const MeanTriple cond = e_step(h, data);
    MeanTriple out;
    out.eta_x = model.eta_x - cond.eta_x;
    out.eta_z = model.eta_z - cond.eta_z;
    out.interaction = model.interaction - cond.interaction;
    return out;
}

namespace {

class AdamState {
public:
    AdamState(Eigen::Index dim, const TrainConfig& cfg)
        : cfg_(cfg), m_(Vector::Zero(dim)), v_(Vector::Zero(dim)) {}

    Vector step(const Vector& grad) {
        ++t_;
        m_ = cfg_.adam_beta1 * m_ + (1.0 - cfg_.adam_beta1) * grad;
        v_ = cfg_.adam_beta2 * v_.array().matrix() +
             (1.0 - cfg_.adam_beta2) * grad.array().square().matrix();
        const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
        const Vector m_hat = m_ / bc1;
        const Vector v_hat = v_ / bc2;
        return cfg_.learning_rate *
               (m_hat.array() / (v_hat.array().sqrt() + cfg_.adam_eps)).matrix();
    }

private:
    TrainConfig cfg_;
    Vector m_;
    Vector v_;
    int t_ = 0;
};

struct Engine {
    const FamilyDescriptor obs;
    const FamilyDescriptor lat;
    ModelClass model_class;
    const std::vector<Observation>& data;
    TrainConfig cfg;
    Matrix a;              // embedding rows span trainable directions
    Eigen::LDLT<Matrix> gram; // decomposition of a a^T
    std::uint64_t draw_counter = 0;

    Vector restrict(const Vector& full) const { return gram.solve(a * full); }
    Vector expand(const Vector& restricted) const { return a.transpose() * restricted; }

    Harmonium rebuild(const Vector& restricted) const {
        return unpack_parameters(obs, lat, expand(restricted));
    }

    Vector mc_model_term(const Harmonium& h, const ConjugationParams& c) {
        const auto pairs =
            sample_joint(h, c, derive_seed(cfg.seed, 0x10000000ULL + draw_counter++),
                         cfg.mc_model_samples);
        Vector acc = Vector::Zero(a.cols());
        for (const auto& [x, z] : pairs)
            acc += flat_statistic(h, x, z);
        return acc / static_cast<double>(pairs.size());
    }

    Vector mc_conditional(const Harmonium& h, const Observation& x) {
        const NaturalPoint post = posterior_params(h, x);
        const auto zs = sample(lat, post, derive_seed(cfg.seed, 0x20000000ULL + draw_counter++),
                               cfg.mc_conditional_samples);
        Vector acc = Vector::Zero(a.cols());
        for (const Observation& z : zs)
            acc += flat_statistic(h, x, z);
        return acc / static_cast<double>(zs.size());
    }
};

} // namespace

FitTrace subspace_fit(const Harmonium& h0, const SubspaceEmbedding& embedding,
                      ModelClass model_class, const std::vector<Observation>& data,
                      const TrainConfig& cfg) {
    if (cfg.algorithm == Algorithm::EM)
        throw unsupported_error("subspace_fit: EM cannot run on a restricted statistic");
    const Eigen::Index full_dim = pack_parameters(h0).size();
    if (embedding.a.cols() != full_dim || embedding.a.rows() > embedding.a.cols())
        throw std::domain_error("subspace_fit: embedding shape mismatch");
    Eigen::ColPivHouseholderQR<Matrix> qr(embedding.a.transpose());
    if (qr.rank() < embedding.a.rows())
        throw std::domain_error("subspace_fit: embedding must have full row rank");

    Engine eng{h0.obs, h0.lat, model_class, data, cfg, embedding.a, {}, 0};
    eng.gram.compute(embedding.a * embedding.a.transpose());

    FitTrace trace;
    Vector theta_r = eng.restrict(pack_parameters(h0));
    AdamState adam(theta_r.size(), cfg);

    const bool mc = cfg.algorithm == Algorithm::CE_MCGD || cfg.algorithm == Algorithm::EM_MCGD;
    const bool frozen_estep =
        cfg.algorithm == Algorithm::EM_GD || cfg.algorithm == Algorithm::EM_MCGD;
    const int n_data = static_cast<int>(data.size());
    const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, n_data) : n_data;

    std::vector<Vector> cond_cache; // per-datum conditional statistics (EM variants)
    bool inner_converged = false;

    auto record = [&](const Harmonium& h) -> bool {
        try {
            trace.conjugation = conjugation_for(h, model_class);
            const double ce = cross_entropy(h, trace.conjugation, data);
            if (!std::isfinite(ce)) {
                trace.aborted = true;
                return false;
            }
            trace.cross_entropy.push_back(ce);
            trace.model = h;
            return true;
        } catch (const std::exception&) {
            trace.aborted = true;
            return false;
        }
    };

    if (!record(eng.rebuild(theta_r)))
        return trace;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Harmonium h = eng.rebuild(theta_r);
        try {
            if (frozen_estep &&
                (cond_cache.empty() || epoch % cfg.estep_refresh_epochs == 0 ||
                 inner_converged)) {
                cond_cache.clear();
                cond_cache.reserve(data.size());
                for (const Observation& x : data)
                    cond_cache.push_back(mc ? eng.mc_conditional(h, x) : flat_conditional(h, x));
                inner_converged = false;
            }

            std::vector<int> order(data.size());
            std::iota(order.begin(), order.end(), 0);
            if (batch < n_data) {
                std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x30000000ULL + epoch));
                std::shuffle(order.begin(), order.end(), shuffle_rng);
            }

            double last_grad_norm = 0.0;
            for (int start = 0; start < n_data; start += batch) {
                const int stop = std::min(start + batch, n_data);
                h = eng.rebuild(theta_r);
                const ConjugationParams c = conjugation_for(h, model_class);

                Vector model_term;
                if (mc)
                    model_term = eng.mc_model_term(h, c);
                else
                    model_term = pack_triple(model_expectations(h, model_class));

                Vector cond_term = Vector::Zero(model_term.size());
                for (int i = start; i < stop; ++i) {
                    const Observation& x = data[static_cast<std::size_t>(order[i])];
                    if (frozen_estep)
                        cond_term += cond_cache[static_cast<std::size_t>(order[i])];
                    else if (mc)
                        cond_term += eng.mc_conditional(h, x);
                    else
                        cond_term += flat_conditional(h, x);
                }
                cond_term /= static_cast<double>(stop - start);

                const Vector grad_r = eng.a * (model_term - cond_term);
                last_grad_norm = grad_r.cwiseAbs().maxCoeff();
                theta_r -= adam.step(grad_r);
                theta_r = eng.restrict(project_valid(eng.obs, eng.lat, eng.expand(theta_r)));
            }
            if (cfg.algorithm == Algorithm::EM_GD && last_grad_norm < 1e-6)
                inner_converged = true;
        } catch (const std::exception&) {
            trace.aborted = true;
            return trace;
        }
        if (!record(eng.rebuild(theta_r)))
            return trace;
    }
    return trace;
}

FitTrace fit(const Harmonium& h0, ModelClass model_class,
             const std::vector<Observation>& data, const TrainConfig& cfg) {
    if (cfg.algorithm == Algorithm::EM) {
        if (model_class == ModelClass::GaussianBoltzmann)
            throw unsupported_error("fit: EM requires an exact M-step; use a gradient method");
        FitTrace trace;
        Harmonium h = h0;
        auto record = [&]() -> bool {
            try {
                trace.conjugation = conjugation_for(h, model_class);
                const double ce = cross_entropy(h, trace.conjugation, data);
                if (!std::isfinite(ce)) {
                    trace.aborted = true;
                    return false;
                }
                trace.cross_entropy.push_back(ce);
                trace.model = h;
                return true;
            } catch (const std::exception&) {
                trace.aborted = true;
                return false;
            }
        };
        if (!record())
            return trace;
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            try {
                h = m_step_exact(model_class, h.obs, h.lat, e_step(h, data));
            } catch (const std::exception&) {
                trace.aborted = true;
                return trace;
            }
            if (!record())
                return trace;
        }
        return trace;
    }
    SubspaceEmbedding identity{
        Matrix::Identity(pack_parameters(h0).size(), pack_parameters(h0).size())};
    return subspace_fit(h0, identity, model_class, data, cfg);
}

} // namespace harmoniums
