#include <stdexcept>

#include <json.hpp>

#include "harmoniums/harmonium.hpp"

namespace harmoniums {

namespace {

using nlohmann::json;

json family_to_json(const FamilyDescriptor& f) {
    json j;
    j["kind"] = f.name();
    j["size"] = f.size();
    if (f.kind() == FamilyKind::NaturalPrior)
        j["base"] = family_to_json(f.base());
    return j;
}

FamilyDescriptor family_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const int size = j.at("size").get<int>();
    if (kind == "categorical")
        return FamilyDescriptor::categorical(size);
    if (kind == "poisson_product")
        return FamilyDescriptor::poisson_product(size);
    if (kind == "multivariate_normal")
        return FamilyDescriptor::multivariate_normal(size);
    if (kind == "von_mises_product")
        return FamilyDescriptor::von_mises_product(size);
    if (kind == "dirichlet")
        return FamilyDescriptor::dirichlet(size);
    if (kind == "boltzmann")
        return FamilyDescriptor::boltzmann(size);
    if (kind == "com_poisson_product")
        return FamilyDescriptor::com_poisson_product(size);
    if (kind == "natural_prior")
        return FamilyDescriptor::natural_prior(family_from_json(j.at("base")));
    throw std::domain_error("unknown family kind: " + kind);
}

std::vector<double> to_std(const Vector& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector from_std(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

std::string to_json(const Harmonium& h) {
    json j;
    j["obs"] = family_to_json(h.obs);
    j["lat"] = family_to_json(h.lat);
    j["theta_x"] = to_std(h.theta_x.coords);
    j["theta_z"] = to_std(h.theta_z.coords);
    // row-major interaction matrix
    std::vector<double> xz;
    xz.reserve(static_cast<std::size_t>(h.theta_xz.size()));
    for (Eigen::Index i = 0; i < h.theta_xz.rows(); ++i)
        for (Eigen::Index k = 0; k < h.theta_xz.cols(); ++k)
            xz.push_back(h.theta_xz(i, k));
    j["theta_xz"] = xz;
    return j.dump(2);
}

Harmonium harmonium_from_json(const std::string& text) {
    const json j = json::parse(text);
    FamilyDescriptor obs = family_from_json(j.at("obs"));
    FamilyDescriptor lat = family_from_json(j.at("lat"));
    NaturalPoint theta_x(obs, from_std(j.at("theta_x").get<std::vector<double>>()));
    NaturalPoint theta_z(lat, from_std(j.at("theta_z").get<std::vector<double>>()));
    const std::vector<double> xz = j.at("theta_xz").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(xz.size()) !=
        Eigen::Index(obs.dimension()) * lat.dimension())
        throw std::domain_error("theta_xz: element count mismatch");
    Matrix theta_xz(obs.dimension(), lat.dimension());
    std::size_t idx = 0;
    for (Eigen::Index i = 0; i < theta_xz.rows(); ++i)
        for (Eigen::Index k = 0; k < theta_xz.cols(); ++k)
            theta_xz(i, k) = xz[idx++];
    return Harmonium(obs, lat, std::move(theta_x), std::move(theta_z), std::move(theta_xz));
}

} // namespace harmoniums
