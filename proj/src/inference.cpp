#include "harmoniums/inference.hpp"

#include <stdexcept>

namespace harmoniums {

NaturalPoint bayes_update(const NaturalPoint& prior, const Matrix& theta_xz,
                          const Vector& rho, const Observation& x) {
    if (theta_xz.cols() != prior.coords.size() || rho.size() != prior.coords.size())
        throw std::domain_error("bayes_update: latent dimension mismatch");
    const Vector sx = sufficient_statistic(x.family, x);
    if (theta_xz.rows() != sx.size())
        throw std::domain_error("bayes_update: observable dimension mismatch");
    return NaturalPoint(prior.family, prior.coords + theta_xz.transpose() * sx - rho);
}

NaturalPoint recursive_update(const NaturalPoint& prior,
                              const std::vector<ConjugatedLikelihood>& likelihoods,
                              const std::vector<Observation>& xs) {
    if (likelihoods.size() != xs.size())
        throw std::domain_error("recursive_update: list length mismatch");
    NaturalPoint post = prior;
    for (std::size_t i = 0; i < xs.size(); ++i)
        post = bayes_update(post, likelihoods[i].theta_xz, likelihoods[i].rho, xs[i]);
    return post;
}

} // namespace harmoniums
