#include "harmoniums/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/errors.hpp"
#include "harmoniums/inference.hpp"
#include "harmoniums/learning.hpp"
#include "harmoniums/special.hpp"

namespace harmoniums {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// --- output plumbing -------------------------------------------------------

std::string format_cell(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path, std::ios::binary) {
        if (!out_)
            throw std::runtime_error("cannot open output file: " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }

    void row(const std::vector<double>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << format_cell(cells[i]);
        out_ << "\n";
    }

    void row(const std::string& label, const std::vector<double>& cells) {
        out_ << label;
        for (double c : cells)
            out_ << "," << format_cell(c);
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open output file: " + path.string());
    out << text;
}

void write_trace(const std::filesystem::path& path, const FitTrace& trace) {
    CsvWriter csv(path, {"epoch", "cross_entropy"});
    for (std::size_t i = 0; i < trace.cross_entropy.size(); ++i)
        csv.row({static_cast<double>(i), trace.cross_entropy[i]});
}

std::vector<std::string> numbered_header(const std::string& first, const std::string& stem,
                                         int count) {
    std::vector<std::string> h{first};
    for (int i = 0; i < count; ++i)
        h.push_back(stem + std::to_string(i));
    return h;
}

// --- small numeric helpers -------------------------------------------------

// Mean and variance of one Conway-Maxwell Poisson coordinate with natural
// coordinates (log_lambda, -nu), by direct series summation.
struct ComMoments {
    double mean = 0.0;
    double variance = 0.0;
};

ComMoments com_moments(double log_lambda, double nu) {
    double log_z = -std::numeric_limits<double>::infinity();
    std::vector<double> log_terms;
    for (int n = 0; n < 2000; ++n) {
        const double lt = n * log_lambda - nu * log_factorial(static_cast<unsigned>(n));
        log_terms.push_back(lt);
        log_z = std::max(log_z, lt) +
                std::log1p(std::exp(std::min(log_z, lt) - std::max(log_z, lt)));
        if (n > 10 && lt - log_z < -40.0)
            break;
    }
    ComMoments m;
    double m2 = 0.0;
    for (std::size_t n = 0; n < log_terms.size(); ++n) {
        const double p = std::exp(log_terms[n] - log_z);
        m.mean += static_cast<double>(n) * p;
        m2 += static_cast<double>(n) * static_cast<double>(n) * p;
    }
    m.variance = m2 - m.mean * m.mean;
    return m;
}

// Sample mean/variance of one coordinate of an observation list.
ComMoments sample_moments(const std::vector<Observation>& data, int coord) {
    ComMoments m;
    double m2 = 0.0;
    for (const Observation& x : data) {
        m.mean += x.value(coord);
        m2 += x.value(coord) * x.value(coord);
    }
    m.mean /= static_cast<double>(data.size());
    m2 /= static_cast<double>(data.size());
    m.variance = m2 - m.mean * m.mean;
    return m;
}

NaturalPoint mvn_from_moments(const Vector& mean, const Matrix& cov) {
    const int n = static_cast<int>(mean.size());
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::domain_error("mvn_from_moments: covariance not positive definite");
    const Matrix prec = llt.solve(Matrix::Identity(n, n));
    const FamilyDescriptor fam = FamilyDescriptor::multivariate_normal(n);
    Vector coords(fam.dimension());
    coords.head(n) = prec * mean;
    coords.tail(n * (n + 1) / 2) = pack_tril_quadratic(-0.5 * prec);
    return NaturalPoint(fam, std::move(coords));
}

// --- scenario: mixture-normal (three univariate components) ----------------

void run_mixture_normal(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    const FamilyDescriptor obs = FamilyDescriptor::multivariate_normal(1);
    const double means[3] = {-3.0, 0.0, 3.0};
    Vector weights(3);
    weights << 0.5, 0.2, 0.3;
    std::vector<NaturalPoint> comps;
    for (double m : means) {
        Vector c(2);
        c << m, -0.5; // unit variance
        comps.emplace_back(obs, c);
    }
    auto [h, c] = mixture_from_components(weights, comps);
    write_text(dir / "model.json", to_json(h));

    const auto data = sample_joint(h, c, derive_seed(cfg.seed, 1), 400);
    {
        CsvWriter csv(dir / "data.csv", {"x", "component"});
        for (const auto& [x, z] : data)
            csv.row({x.value(0), z.value(0)});
    }
    {
        CsvWriter csv(dir / "density.csv",
                      {"x", "mixture", "component0", "component1", "component2"});
        for (int i = 0; i <= 700; ++i) {
            const double x = -7.0 + 0.02 * i;
            Observation ox(obs, Vector::Constant(1, x));
            std::vector<double> cells{x, std::exp(observable_log_density(h, c, ox))};
            for (const NaturalPoint& comp : comps)
                cells.push_back(std::exp(log_density(obs, comp, ox)));
            csv.row(cells);
        }
    }
    {
        CsvWriter csv(dir / "posterior_weights.csv",
                      {"x", "weight0", "weight1", "weight2"});
        for (double x : {-2.0, 0.5, 2.0}) {
            const Vector w =
                to_mean(h.lat, posterior_params(h, Observation(obs, Vector::Constant(1, x))))
                    .coords;
            csv.row({x, 1.0 - w.sum(), w(0), w(1)});
        }
    }
}

// --- scenario: gaussian-boltzmann on two circles ----------------------------

SubspaceEmbedding gaussian_boltzmann_embedding(const FamilyDescriptor& obs,
                                               const FamilyDescriptor& lat) {
    const int dx = obs.dimension();
    const int dz = lat.dimension();
    const int n = obs.size();
    const int m = lat.size();
    std::vector<int> keep;
    for (int i = 0; i < dx + dz; ++i)
        keep.push_back(i);
    // Interaction entries: only the mean-block corner may move.
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            keep.push_back(dx + dz + i * dz + j);
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(keep.size()), dx + dz + dx * dz);
    for (std::size_t r = 0; r < keep.size(); ++r)
        a(static_cast<Eigen::Index>(r), keep[r]) = 1.0;
    return {std::move(a)};
}

void run_gaussian_boltzmann(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    const FamilyDescriptor obs = FamilyDescriptor::multivariate_normal(2);
    const FamilyDescriptor lat = FamilyDescriptor::boltzmann(6);
    const auto train = two_circles_dataset(derive_seed(cfg.seed, 1), 400);
    const auto heldout = two_circles_dataset(derive_seed(cfg.seed, 2), 400);
    {
        CsvWriter csv(dir / "data.csv", {"x0", "x1"});
        for (const Observation& x : train)
            csv.row({x.value(0), x.value(1)});
    }

    // Initialize the observable bias at the data MLE with inflated covariance
    // and break symmetry with small deterministic interactions.
    Vector mean = Vector::Zero(2);
    for (const Observation& x : train)
        mean += x.value;
    mean /= static_cast<double>(train.size());
    Matrix cov = Matrix::Zero(2, 2);
    for (const Observation& x : train)
        cov += (x.value - mean) * (x.value - mean).transpose();
    cov /= static_cast<double>(train.size());

    // Mean offsets are subset sums of the interaction columns, so arrange the
    // columns on a ring around the data mean and let training refine them.
    const NaturalPoint theta_x0 = mvn_from_moments(mean, 0.5 * cov);
    const Matrix prec = (0.5 * cov).inverse();
    std::mt19937_64 rng(derive_seed(cfg.seed, 3));
    std::normal_distribution<double> jitter(0.0, 0.2);
    Matrix theta_xz = Matrix::Zero(obs.dimension(), lat.dimension());
    for (int j = 0; j < 6; ++j) {
        const double phi = two_pi * j / 6.0;
        Vector delta(2);
        delta << 1.3 * std::cos(phi), 1.3 * std::sin(phi);
        const Vector column = prec * delta;
        theta_xz(0, j) = column(0) + jitter(rng);
        theta_xz(1, j) = column(1) + jitter(rng);
    }
    Harmonium h0(obs, lat, theta_x0, NaturalPoint(lat, Vector::Zero(lat.dimension())),
                 std::move(theta_xz));

    TrainConfig tc;
    tc.algorithm = Algorithm::CE_GD;
    tc.epochs = cfg.epochs > 0 ? cfg.epochs : 3000;
    tc.learning_rate = 5e-2;
    tc.batch_size = 50;
    tc.seed = derive_seed(cfg.seed, 4);
    FitTrace trace = subspace_fit(h0, gaussian_boltzmann_embedding(obs, lat),
                                  ModelClass::GaussianBoltzmann, train, tc);
    if (!trace.model)
        throw numeric_error("gaussian-boltzmann: training diverged");
    const Harmonium& h = *trace.model;
    const ConjugationParams c = trace.conjugation;
    write_text(dir / "model.json", to_json(h));
    write_trace(dir / "trace.csv", trace);

    { // likelihood moments at the one-hot latent states
        CsvWriter csv(dir / "likelihoods.csv",
                      {"neuron", "mean0", "mean1", "cov00", "cov01", "cov11"});
        for (int j = 0; j < 6; ++j) {
            Vector z = Vector::Zero(6);
            z(j) = 1.0;
            const MeanPoint eta = to_mean(obs, likelihood_params(h, Observation(lat, z)));
            const Vector m = eta.coords.head(2);
            Matrix half = unpack_tril_symmetric(eta.coords.tail(3), 2);
            Matrix moment = 2.0 * half;
            moment.diagonal() = half.diagonal();
            const Matrix sig = moment - m * m.transpose();
            csv.row({static_cast<double>(j), m(0), m(1), sig(0, 0), sig(0, 1), sig(1, 1)});
        }
    }
    { // observable density on a grid
        CsvWriter csv(dir / "density.csv", {"x0", "x1", "density"});
        for (int i = 0; i <= 120; ++i)
            for (int j = 0; j <= 120; ++j) {
                const double x0 = -4.0 + i * (8.0 / 120.0);
                const double x1 = -4.0 + j * (8.0 / 120.0);
                Vector v(2);
                v << x0, x1;
                csv.row({x0, x1, std::exp(observable_log_density(h, c, Observation(obs, v)))});
            }
    }
    { // prior correlation matrix of the latent neurons
        const MeanPoint prior_eta = to_mean(lat, prior_params(h, c));
        Matrix second(6, 6);
        int idx = 6;
        for (int i = 0; i < 6; ++i)
            for (int j = i + 1; j < 6; ++j) {
                second(i, j) = second(j, i) = prior_eta.coords(idx++);
            }
        for (int i = 0; i < 6; ++i)
            second(i, i) = prior_eta.coords(i);
        CsvWriter csv(dir / "prior_correlations.csv", numbered_header("neuron", "corr", 6));
        for (int i = 0; i < 6; ++i) {
            std::vector<double> cells{static_cast<double>(i)};
            for (int j = 0; j < 6; ++j) {
                const double mi = prior_eta.coords(i), mj = prior_eta.coords(j);
                const double si = std::sqrt(mi * (1.0 - mi)), sj = std::sqrt(mj * (1.0 - mj));
                cells.push_back(i == j ? 1.0 : (second(i, j) - mi * mj) / (si * sj));
            }
            csv.row(cells);
        }
    }
    { // posterior moment matrices at four probes
        CsvWriter csv(dir / "posterior_moments.csv",
                      {"probe", "x0", "x1", "i", "j", "moment"});
        const double probes[4][2] = {{1.0, 0.0}, {0.0, 2.0}, {-1.4, 1.4}, {-2.0, 0.0}};
        for (int p = 0; p < 4; ++p) {
            Vector v(2);
            v << probes[p][0], probes[p][1];
            const MeanPoint eta = to_mean(lat, posterior_params(h, Observation(obs, v)));
            Matrix second(6, 6);
            int idx = 6;
            for (int i = 0; i < 6; ++i)
                for (int j = i + 1; j < 6; ++j)
                    second(i, j) = second(j, i) = eta.coords(idx++);
            for (int i = 0; i < 6; ++i)
                second(i, i) = eta.coords(i);
            for (int i = 0; i < 6; ++i)
                for (int j = 0; j < 6; ++j)
                    csv.row({static_cast<double>(p), v(0), v(1), static_cast<double>(i),
                             static_cast<double>(j), second(i, j)});
        }
    }
    { // held-out comparison against a single-Gaussian MLE
        const NaturalPoint mle = mvn_from_moments(mean, cov);
        double ce_model = 0.0, ce_mle = 0.0;
        for (const Observation& x : heldout) {
            ce_model -= observable_log_density(h, c, x);
            ce_mle -= log_density(obs, mle, x);
        }
        ce_model /= static_cast<double>(heldout.size());
        ce_mle /= static_cast<double>(heldout.size());
        CsvWriter csv(dir / "heldout.csv", {"model_cross_entropy", "gaussian_mle_cross_entropy"});
        csv.row({ce_model, ce_mle});
    }
}

// --- scenario: population-code ---------------------------------------------

void run_population_code(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    const int n_neurons = 8;
    const double kappa = 2.0;
    const double peak_rate = 10.0;
    const FamilyDescriptor obs = FamilyDescriptor::poisson_product(n_neurons);
    const FamilyDescriptor lat = FamilyDescriptor::von_mises_product(1);

    Vector theta_x = Vector::Constant(n_neurons, std::log(peak_rate) - kappa);
    Matrix theta_xz(n_neurons, 2);
    for (int i = 0; i < n_neurons; ++i) {
        const double phi = two_pi * i / n_neurons;
        theta_xz(i, 0) = kappa * std::cos(phi);
        theta_xz(i, 1) = kappa * std::sin(phi);
    }
    Vector theta_z(2);
    theta_z << 0.5, 0.0; // weak prior preference for angle 0
    Harmonium h(obs, lat, NaturalPoint(obs, theta_x), NaturalPoint(lat, theta_z), theta_xz);
    write_text(dir / "model.json", to_json(h));

    // Conjugation by regression on an angle grid.
    std::vector<Observation> probes;
    for (int i = 0; i < 64; ++i)
        probes.emplace_back(lat, Vector::Constant(1, two_pi * i / 64.0));
    auto [c, residual] = fit_conjugation(h, probes);
    {
        CsvWriter csv(dir / "conjugation.csv", {"rho_cos", "rho_sin", "chi", "residual"});
        csv.row({c.rho(0), c.rho(1), c.chi, residual});
    }
    {
        CsvWriter csv(dir / "tuning_curves.csv", numbered_header("z", "rate", n_neurons));
        for (int g = 0; g < 256; ++g) {
            const double z = two_pi * g / 256.0;
            const Vector rates =
                to_mean(obs, likelihood_params(h, Observation(lat, Vector::Constant(1, z))))
                    .coords;
            std::vector<double> cells{z};
            for (int i = 0; i < n_neurons; ++i)
                cells.push_back(rates(i));
            csv.row(cells);
        }
    }
    { // count correlations under the prior, by quadrature over the stimulus
        const NaturalPoint prior = prior_params(h, c);
        const int nodes = 1024;
        Vector mean_n = Vector::Zero(n_neurons);
        Matrix second = Matrix::Zero(n_neurons, n_neurons);
        for (int g = 0; g < nodes; ++g) {
            const double z = two_pi * g / nodes;
            const Observation oz(lat, Vector::Constant(1, z));
            const double w = std::exp(log_density(lat, prior, oz)) * (two_pi / nodes);
            const Vector f = to_mean(obs, likelihood_params(h, oz)).coords;
            mean_n += w * f;
            second += w * (f * f.transpose() + f.asDiagonal().toDenseMatrix());
        }
        CsvWriter csv(dir / "count_correlations.csv", numbered_header("neuron", "corr", n_neurons));
        for (int i = 0; i < n_neurons; ++i) {
            std::vector<double> cells{static_cast<double>(i)};
            for (int j = 0; j < n_neurons; ++j) {
                const double cij = second(i, j) - mean_n(i) * mean_n(j);
                const double si = std::sqrt(second(i, i) - mean_n(i) * mean_n(i));
                const double sj = std::sqrt(second(j, j) - mean_n(j) * mean_n(j));
                cells.push_back(cij / (si * sj));
            }
            csv.row(cells);
        }
    }
    { // decode one spike pattern drawn at a true stimulus
        const double z_true = 2.0;
        const Observation z_obs(lat, Vector::Constant(1, z_true));
        const auto counts = sample(obs, likelihood_params(h, z_obs),
                                   derive_seed(cfg.seed, 1), 1);
        {
            CsvWriter csv(dir / "spikes.csv", numbered_header("z_true", "count", n_neurons));
            std::vector<double> cells{z_true};
            for (int i = 0; i < n_neurons; ++i)
                cells.push_back(counts[0].value(i));
            csv.row(cells);
        }
        const NaturalPoint prior = prior_params(h, c);
        const NaturalPoint post = bayes_update(prior, theta_xz, c.rho, counts[0]);
        CsvWriter csv(dir / "posterior.csv", {"z", "prior", "posterior"});
        for (int g = 0; g <= 512; ++g) {
            const double z = two_pi * g / 512.0;
            const Observation oz(lat, Vector::Constant(1, std::fmod(z, two_pi)));
            csv.row({z, std::exp(log_density(lat, prior, oz)),
                     std::exp(log_density(lat, post, oz))});
        }
    }
}

// --- scenario: dirichlet-inference -----------------------------------------

void write_simplex_density(const std::filesystem::path& path, const Vector& alpha) {
    // Density over (p0, p1); p2 = 1 - p0 - p1. Evaluated directly so the
    // boundary of the simplex is handled by continuity.
    const double log_norm = std::lgamma(alpha.sum()) - std::lgamma(alpha(0)) -
                            std::lgamma(alpha(1)) - std::lgamma(alpha(2));
    const int g = 400;
    CsvWriter csv(path, {"p0", "p1", "density"});
    for (int i = 0; i <= g; ++i)
        for (int j = 0; j <= g; ++j) {
            const double p0 = static_cast<double>(i) / g;
            const double p1 = static_cast<double>(j) / g;
            const double p2 = 1.0 - p0 - p1;
            double density = 0.0;
            if (p2 >= 0.0) {
                const double lp = (alpha(0) - 1.0) * std::log(std::max(p0, 1e-12)) +
                                  (alpha(1) - 1.0) * std::log(std::max(p1, 1e-12)) +
                                  (alpha(2) - 1.0) * std::log(std::max(p2, 1e-12));
                density = std::exp(log_norm + lp);
            }
            csv.row({p0, p1, density});
        }
}

void run_dirichlet_inference(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    auto [h, c] = dirichlet_categorical_harmonium(2);
    write_text(dir / "model.json", to_json(h));

    Vector true_weights(3);
    true_weights << 0.5, 0.3, 0.2;
    const FamilyDescriptor cat = h.obs;
    Vector theta_cat(2);
    theta_cat << std::log(true_weights(1) / true_weights(0)),
        std::log(true_weights(2) / true_weights(0));
    const auto draws =
        sample(cat, NaturalPoint(cat, theta_cat), derive_seed(cfg.seed, 1), 30);
    {
        CsvWriter csv(dir / "data.csv", {"draw", "category"});
        for (std::size_t i = 0; i < draws.size(); ++i)
            csv.row({static_cast<double>(i), draws[i].value(0)});
    }

    const NaturalPoint prior = prior_params(h, c);
    write_simplex_density(dir / "prior.csv", prior.coords + Vector::Ones(3));
    for (int n : {10, 20, 30}) {
        std::vector<ConjugatedLikelihood> liks(
            static_cast<std::size_t>(n), ConjugatedLikelihood{cat, h.theta_xz, c.rho});
        const std::vector<Observation> head(draws.begin(), draws.begin() + n);
        const NaturalPoint post = recursive_update(prior, liks, head);
        char name[32];
        std::snprintf(name, sizeof(name), "posterior_%03d.csv", n);
        write_simplex_density(dir / name, post.coords + Vector::Ones(3));
    }
}

// --- scenario: vonmises-training -------------------------------------------

std::pair<Harmonium, ConjugationParams> vonmises_ground_truth() {
    const FamilyDescriptor obs = FamilyDescriptor::von_mises_product(2);
    const double centers[3][2] = {{1.0, 4.0}, {3.5, 1.5}, {5.5, 5.0}};
    const double kappa = 1.5;
    std::vector<NaturalPoint> comps;
    for (const auto& mu : centers) {
        Vector coords(4);
        coords << kappa * std::cos(mu[0]), kappa * std::sin(mu[0]),
            kappa * std::cos(mu[1]), kappa * std::sin(mu[1]);
        comps.emplace_back(obs, coords);
    }
    Vector weights(3);
    weights << 0.4, 0.35, 0.25;
    return mixture_from_components(weights, comps);
}

Harmonium vonmises_init(const std::vector<Observation>& data, std::uint64_t seed) {
    const FamilyDescriptor obs = data.front().family;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    std::vector<NaturalPoint> comps;
    for (int k = 0; k < 3; ++k) {
        const Observation& x = data[pick(rng)];
        Vector coords(4);
        for (int j = 0; j < 2; ++j) {
            coords(2 * j) = std::cos(x.value(j));
            coords(2 * j + 1) = std::sin(x.value(j));
        }
        comps.emplace_back(obs, coords);
    }
    return mixture_from_components(Vector::Constant(3, 1.0 / 3.0), comps).first;
}

void run_vonmises_training(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    auto [truth, c_truth] = vonmises_ground_truth();
    write_text(dir / "ground_truth.json", to_json(truth));
    const auto pairs = sample_joint(truth, c_truth, derive_seed(cfg.seed, 1), 100);
    std::vector<Observation> data;
    data.reserve(pairs.size());
    for (const auto& [x, z] : pairs)
        data.push_back(x);
    {
        CsvWriter csv(dir / "data.csv", {"z0", "z1"});
        for (const Observation& x : data)
            csv.row({x.value(0), x.value(1)});
    }
    const double truth_ce = cross_entropy(truth, c_truth, data);
    const Harmonium h0 = vonmises_init(data, derive_seed(cfg.seed, 2));

    struct Run {
        const char* name;
        Algorithm algorithm;
        int batch;
    };
    const Run runs[4] = {{"ce_gd", Algorithm::CE_GD, 0},
                         {"em_gd", Algorithm::EM_GD, 0},
                         {"ce_mcgd", Algorithm::CE_MCGD, 10},
                         {"em_mcgd", Algorithm::EM_MCGD, 10}};
    CsvWriter summary(dir / "summary.csv",
                      {"algorithm", "final_cross_entropy", "truth_cross_entropy"});
    for (int r = 0; r < 4; ++r) {
        TrainConfig tc;
        tc.algorithm = runs[r].algorithm;
        tc.epochs = cfg.epochs > 0 ? cfg.epochs : 500;
        tc.batch_size = runs[r].batch;
        tc.seed = derive_seed(cfg.seed, 10 + static_cast<std::uint64_t>(r));
        const FitTrace trace = fit(h0, ModelClass::Mixture, data, tc);
        write_trace(dir / (std::string("trace_") + runs[r].name + ".csv"), trace);
        if (trace.model)
            write_text(dir / (std::string("model_") + runs[r].name + ".json"),
                       to_json(*trace.model));
        summary.row(runs[r].name, {trace.cross_entropy.back(), truth_ce});
    }
}

// --- scenario: com-mixture --------------------------------------------------

std::pair<Harmonium, ConjugationParams> com_ground_truth() {
    const int d = 5;
    const FamilyDescriptor obs = FamilyDescriptor::com_poisson_product(d);
    const double nu[5] = {1.0, 1.3, 1.7, 2.1, 2.5}; // shared across components
    const double comp_means[3][5] = {
        {2.0, 3.0, 4.0, 5.0, 6.0}, {6.0, 5.0, 4.0, 3.0, 2.0}, {4.0, 6.0, 2.0, 7.0, 3.0}};
    std::vector<NaturalPoint> comps;
    for (const auto& means : comp_means) {
        Vector coords(2 * d);
        for (int j = 0; j < d; ++j) {
            coords(2 * j) = nu[j] * std::log(means[j]);
            coords(2 * j + 1) = -nu[j];
        }
        comps.emplace_back(obs, coords);
    }
    Vector weights(3);
    weights << 0.4, 0.35, 0.25;
    return mixture_from_components(weights, comps);
}

// Trainable directions: both biases plus the count rows of the interaction
// matrix; the log n! rows stay fixed so components share dispersion.
SubspaceEmbedding com_mixture_embedding(const FamilyDescriptor& obs,
                                        const FamilyDescriptor& lat) {
    const int dx = obs.dimension();
    const int dz = lat.dimension();
    std::vector<int> keep;
    for (int i = 0; i < dx + dz; ++i)
        keep.push_back(i);
    for (int j = 0; j < obs.size(); ++j)
        for (int k = 0; k < dz; ++k)
            keep.push_back(dx + dz + (2 * j) * dz + k);
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(keep.size()), dx + dz + dx * dz);
    for (std::size_t r = 0; r < keep.size(); ++r)
        a(static_cast<Eigen::Index>(r), keep[r]) = 1.0;
    return {std::move(a)};
}

void run_com_mixture(const ScenarioConfig& cfg, const std::filesystem::path& dir) {
    const int d = 5;
    auto [truth, c_truth] = com_ground_truth();
    write_text(dir / "ground_truth.json", to_json(truth));
    const auto pairs = sample_joint(truth, c_truth, derive_seed(cfg.seed, 1), 400);
    std::vector<Observation> data;
    for (const auto& [x, z] : pairs)
        data.push_back(x);
    {
        CsvWriter csv(dir / "data.csv", numbered_header("row", "n", d));
        for (std::size_t r = 0; r < data.size(); ++r) {
            std::vector<double> cells{static_cast<double>(r)};
            for (int j = 0; j < d; ++j)
                cells.push_back(data[r].value(j));
            csv.row(cells);
        }
    }

    // Moment-matched single-component start with mild dispersion, plus small
    // deterministic interactions to break component symmetry.
    const FamilyDescriptor obs = truth.obs;
    const FamilyDescriptor lat = truth.lat;
    Vector theta_x(2 * d);
    for (int j = 0; j < d; ++j) {
        const double mean = std::max(sample_moments(data, j).mean, 0.5);
        theta_x(2 * j) = 1.2 * std::log(mean);
        theta_x(2 * j + 1) = -1.2;
    }
    std::mt19937_64 rng(derive_seed(cfg.seed, 2));
    std::normal_distribution<double> jitter(0.0, 0.2);
    Matrix theta_xz = Matrix::Zero(2 * d, 2);
    for (int j = 0; j < d; ++j)
        for (int k = 0; k < 2; ++k)
            theta_xz(2 * j, k) = jitter(rng);
    Harmonium h0(obs, lat, NaturalPoint(obs, theta_x), NaturalPoint(lat, Vector::Zero(2)),
                 theta_xz);

    TrainConfig tc;
    tc.algorithm = Algorithm::EM_GD;
    tc.epochs = cfg.epochs > 0 ? cfg.epochs : 500;
    tc.estep_refresh_epochs = 25;
    tc.seed = derive_seed(cfg.seed, 3);
    const FitTrace trace =
        subspace_fit(h0, com_mixture_embedding(obs, lat), ModelClass::Mixture, data, tc);
    if (!trace.model)
        throw numeric_error("com-mixture: training diverged");
    const Harmonium& h = *trace.model;
    write_text(dir / "model.json", to_json(h));
    write_trace(dir / "trace.csv", trace);

    // Mixture weights and per-component count moments of the trained model.
    const ConjugationParams c = trace.conjugation;
    const Vector w_tail = to_mean(lat, prior_params(h, c)).coords;
    Vector w(3);
    w << 1.0 - w_tail.sum(), w_tail(0), w_tail(1);
    std::vector<Vector> comp_mean(3, Vector::Zero(d));
    std::vector<Vector> comp_var(3, Vector::Zero(d));
    for (int k = 0; k < 3; ++k) {
        Vector z = Vector::Zero(2);
        if (k > 0)
            z(k - 1) = 1.0;
        Vector lik = h.theta_x.coords;
        if (k > 0)
            lik += h.theta_xz.col(k - 1);
        for (int j = 0; j < d; ++j) {
            const ComMoments m = com_moments(lik(2 * j), -lik(2 * j + 1));
            comp_mean[k](j) = m.mean;
            comp_var[k](j) = m.variance;
        }
    }
    {
        CsvWriter csv(dir / "fano.csv",
                      {"coordinate", "model_mean", "sample_mean", "model_fano", "sample_fano"});
        for (int j = 0; j < d; ++j) {
            double mean = 0.0, m2 = 0.0;
            for (int k = 0; k < 3; ++k) {
                mean += w(k) * comp_mean[k](j);
                m2 += w(k) * (comp_var[k](j) + comp_mean[k](j) * comp_mean[k](j));
            }
            const double var = m2 - mean * mean;
            const ComMoments s = sample_moments(data, j);
            csv.row({static_cast<double>(j), mean, s.mean, var / mean, s.variance / s.mean});
        }
    }
    {
        CsvWriter csv(dir / "count_correlations.csv", numbered_header("coordinate", "corr", d));
        Matrix second = Matrix::Zero(d, d);
        Vector mean = Vector::Zero(d);
        for (int k = 0; k < 3; ++k) {
            mean += w(k) * comp_mean[k];
            second += w(k) * (comp_mean[k] * comp_mean[k].transpose() +
                              Matrix(comp_var[k].asDiagonal()));
        }
        for (int i = 0; i < d; ++i) {
            std::vector<double> cells{static_cast<double>(i)};
            for (int j = 0; j < d; ++j) {
                const double cij = second(i, j) - mean(i) * mean(j);
                const double si = std::sqrt(second(i, i) - mean(i) * mean(i));
                const double sj = std::sqrt(second(j, j) - mean(j) * mean(j));
                cells.push_back(cij / (si * sj));
            }
            csv.row(cells);
        }
    }
}

} // namespace

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{
        "mixture-normal",     "gaussian-boltzmann", "population-code",
        "dirichlet-inference", "vonmises-training",  "com-mixture"};
    return names;
}

std::vector<Observation> two_circles_dataset(std::uint64_t seed, int count) {
    const FamilyDescriptor obs = FamilyDescriptor::multivariate_normal(2);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, two_pi);
    std::normal_distribution<double> noise(0.0, 0.15);
    std::vector<Observation> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double r = (i % 2 == 0) ? 1.0 : 2.0;
        const double phi = angle(rng);
        Vector x(2);
        x << r * std::cos(phi) + noise(rng), r * std::sin(phi) + noise(rng);
        out.emplace_back(obs, std::move(x));
    }
    return out;
}

void run_scenario(const ScenarioConfig& config) {
    const std::filesystem::path dir(config.output_dir);
    std::filesystem::create_directories(dir);
    if (config.scenario == "mixture-normal")
        run_mixture_normal(config, dir);
    else if (config.scenario == "gaussian-boltzmann")
        run_gaussian_boltzmann(config, dir);
    else if (config.scenario == "population-code")
        run_population_code(config, dir);
    else if (config.scenario == "dirichlet-inference")
        run_dirichlet_inference(config, dir);
    else if (config.scenario == "vonmises-training")
        run_vonmises_training(config, dir);
    else if (config.scenario == "com-mixture")
        run_com_mixture(config, dir);
    else
        throw std::domain_error("unknown scenario: " + config.scenario);
}

} // namespace harmoniums
