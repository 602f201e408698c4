#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/inference.hpp"
#include "harmoniums/learning.hpp"
#include "harmoniums/scenarios.hpp"

namespace py = pybind11;
using namespace harmoniums;

PYBIND11_MODULE(_harmoniums, m) {
    m.doc() = "Exact inference and learning in conjugated harmoniums";

    py::register_exception<std::domain_error>(m, "DomainError", PyExc_ValueError);

    py::enum_<FamilyKind>(m, "FamilyKind")
        .value("Categorical", FamilyKind::Categorical)
        .value("PoissonProduct", FamilyKind::PoissonProduct)
        .value("MultivariateNormal", FamilyKind::MultivariateNormal)
        .value("VonMisesProduct", FamilyKind::VonMisesProduct)
        .value("Dirichlet", FamilyKind::Dirichlet)
        .value("Boltzmann", FamilyKind::Boltzmann)
        .value("CoMPoissonProduct", FamilyKind::CoMPoissonProduct)
        .value("NaturalPrior", FamilyKind::NaturalPrior);

    py::class_<FamilyDescriptor>(m, "FamilyDescriptor")
        .def_static("categorical", &FamilyDescriptor::categorical, py::arg("num_nonzero_states"))
        .def_static("poisson_product", &FamilyDescriptor::poisson_product, py::arg("neuron_count"))
        .def_static("multivariate_normal", &FamilyDescriptor::multivariate_normal,
                    py::arg("dimension"))
        .def_static("von_mises_product", &FamilyDescriptor::von_mises_product,
                    py::arg("dimension"))
        .def_static("dirichlet", &FamilyDescriptor::dirichlet, py::arg("simplex_dimension"))
        .def_static("boltzmann", &FamilyDescriptor::boltzmann, py::arg("neuron_count"))
        .def_static("com_poisson_product", &FamilyDescriptor::com_poisson_product,
                    py::arg("dimension"))
        .def_static("natural_prior", &FamilyDescriptor::natural_prior, py::arg("base"))
        .def_property_readonly("kind", &FamilyDescriptor::kind)
        .def_property_readonly("size", &FamilyDescriptor::size)
        .def_property_readonly("dimension", &FamilyDescriptor::dimension)
        .def("name", &FamilyDescriptor::name)
        .def("__eq__", &FamilyDescriptor::operator==)
        .def("__repr__", [](const FamilyDescriptor& f) {
            return "<FamilyDescriptor " + f.name() + ">";
        });

    py::class_<NaturalPoint>(m, "NaturalPoint")
        .def(py::init<FamilyDescriptor, Vector>(), py::arg("family"), py::arg("coords"))
        .def_readonly("family", &NaturalPoint::family)
        .def_readonly("coords", &NaturalPoint::coords);

    py::class_<MeanPoint>(m, "MeanPoint")
        .def(py::init<FamilyDescriptor, Vector>(), py::arg("family"), py::arg("coords"))
        .def_readonly("family", &MeanPoint::family)
        .def_readonly("coords", &MeanPoint::coords);

    py::class_<Observation>(m, "Observation")
        .def(py::init<FamilyDescriptor, Vector>(), py::arg("family"), py::arg("value"))
        .def_readonly("family", &Observation::family)
        .def_readonly("value", &Observation::value);

    m.def("sufficient_statistic", &sufficient_statistic, py::arg("family"), py::arg("x"));
    m.def("log_base_measure", &log_base_measure, py::arg("family"), py::arg("x"));
    m.def("log_partition", &log_partition, py::arg("family"), py::arg("theta"));
    m.def("to_mean", &to_mean, py::arg("family"), py::arg("theta"));
    m.def("to_natural", &to_natural, py::arg("family"), py::arg("eta"));
    m.def("log_density", &log_density, py::arg("family"), py::arg("theta"), py::arg("x"));
    m.def("sample", &sample, py::arg("family"), py::arg("theta"), py::arg("rng_seed"),
          py::arg("count"));
    m.def("enumerate_support", &enumerate_support, py::arg("family"));

    py::class_<Harmonium>(m, "Harmonium")
        .def(py::init<FamilyDescriptor, FamilyDescriptor, NaturalPoint, NaturalPoint, Matrix>(),
             py::arg("obs"), py::arg("lat"), py::arg("theta_x"), py::arg("theta_z"),
             py::arg("theta_xz"))
        .def_readonly("obs", &Harmonium::obs)
        .def_readonly("lat", &Harmonium::lat)
        .def_readonly("theta_x", &Harmonium::theta_x)
        .def_readonly("theta_z", &Harmonium::theta_z)
        .def_readonly("theta_xz", &Harmonium::theta_xz);

    py::class_<ConjugationParams>(m, "ConjugationParams")
        .def(py::init([](Vector rho, double chi) {
                 return ConjugationParams{std::move(rho), chi};
             }),
             py::arg("rho"), py::arg("chi"))
        .def_readonly("rho", &ConjugationParams::rho)
        .def_readonly("chi", &ConjugationParams::chi);

    m.def("likelihood_params", &likelihood_params, py::arg("h"), py::arg("z"));
    m.def("posterior_params", &posterior_params, py::arg("h"), py::arg("x"));
    m.def("prior_params", &prior_params, py::arg("h"), py::arg("c"));
    m.def("joint_log_partition", &joint_log_partition, py::arg("h"), py::arg("c"));
    m.def("joint_log_density", &joint_log_density, py::arg("h"), py::arg("c"), py::arg("x"),
          py::arg("z"));
    m.def("observable_log_density", &observable_log_density, py::arg("h"), py::arg("c"),
          py::arg("x"));
    m.def("sample_joint", &sample_joint, py::arg("h"), py::arg("c"), py::arg("rng_seed"),
          py::arg("count"));
    m.def("gibbs_chain", &gibbs_chain, py::arg("h"), py::arg("x0"), py::arg("steps"),
          py::arg("rng_seed"));
    m.def("to_json", &to_json, py::arg("h"));
    m.def("harmonium_from_json", &harmonium_from_json, py::arg("text"));

    m.def("categorical_conjugation", &categorical_conjugation, py::arg("h"));
    m.def("linear_gaussian_conjugation", &linear_gaussian_conjugation, py::arg("h"));
    m.def("fit_conjugation", &fit_conjugation, py::arg("h"), py::arg("z_probes"));
    m.def("verify_conjugation", &verify_conjugation, py::arg("h"), py::arg("c"),
          py::arg("z_probes"));
    m.def("bayes_estimation_harmonium", &bayes_estimation_harmonium, py::arg("obs"));
    m.def("dirichlet_categorical_harmonium", &dirichlet_categorical_harmonium, py::arg("d"));
    m.def("mixture_from_components", &mixture_from_components, py::arg("weights"),
          py::arg("components"));
    m.def("lgm_from_moments", &lgm_from_moments, py::arg("m_x"), py::arg("sigma_x"),
          py::arg("w"), py::arg("m_z"), py::arg("sigma_z"));

    py::class_<ConjugatedLikelihood>(m, "ConjugatedLikelihood")
        .def(py::init([](FamilyDescriptor obs, Matrix theta_xz, Vector rho) {
                 return ConjugatedLikelihood{std::move(obs), std::move(theta_xz),
                                             std::move(rho)};
             }),
             py::arg("obs"), py::arg("theta_xz"), py::arg("rho"))
        .def_readonly("obs", &ConjugatedLikelihood::obs)
        .def_readonly("theta_xz", &ConjugatedLikelihood::theta_xz)
        .def_readonly("rho", &ConjugatedLikelihood::rho);

    m.def("bayes_update", &bayes_update, py::arg("prior"), py::arg("theta_xz"), py::arg("rho"),
          py::arg("x"));
    m.def("recursive_update", &recursive_update, py::arg("prior"), py::arg("likelihoods"),
          py::arg("xs"));

    py::enum_<Algorithm>(m, "Algorithm")
        .value("EM", Algorithm::EM)
        .value("CE_GD", Algorithm::CE_GD)
        .value("EM_GD", Algorithm::EM_GD)
        .value("CE_MCGD", Algorithm::CE_MCGD)
        .value("EM_MCGD", Algorithm::EM_MCGD);

    py::enum_<ModelClass>(m, "ModelClass")
        .value("Mixture", ModelClass::Mixture)
        .value("LinearGaussian", ModelClass::LinearGaussian)
        .value("GaussianBoltzmann", ModelClass::GaussianBoltzmann);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("algorithm", &TrainConfig::algorithm)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
        .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
        .def_readwrite("adam_eps", &TrainConfig::adam_eps)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("mc_model_samples", &TrainConfig::mc_model_samples)
        .def_readwrite("mc_conditional_samples", &TrainConfig::mc_conditional_samples)
        .def_readwrite("estep_refresh_epochs", &TrainConfig::estep_refresh_epochs)
        .def_readwrite("seed", &TrainConfig::seed);

    py::class_<MeanTriple>(m, "MeanTriple")
        .def_readonly("eta_x", &MeanTriple::eta_x)
        .def_readonly("eta_z", &MeanTriple::eta_z)
        .def_readonly("interaction", &MeanTriple::interaction);

    py::class_<FitTrace>(m, "FitTrace")
        .def_readonly("cross_entropy", &FitTrace::cross_entropy)
        .def_readonly("model", &FitTrace::model)
        .def_readonly("conjugation", &FitTrace::conjugation)
        .def_readonly("aborted", &FitTrace::aborted);

    py::class_<SubspaceEmbedding>(m, "SubspaceEmbedding")
        .def(py::init([](Matrix a) { return SubspaceEmbedding{std::move(a)}; }),
             py::arg("a"))
        .def_readonly("a", &SubspaceEmbedding::a);

    m.def("conjugation_for", &conjugation_for, py::arg("h"), py::arg("model_class"));
    m.def("cross_entropy", &cross_entropy, py::arg("h"), py::arg("c"), py::arg("data"));
    m.def("e_step", &e_step, py::arg("h"), py::arg("data"));
    m.def("m_step_exact", &m_step_exact, py::arg("model_class"), py::arg("obs"), py::arg("lat"),
          py::arg("averaged"));
    m.def("model_expectations", &model_expectations, py::arg("h"), py::arg("model_class"));
    m.def("ce_gradients", &ce_gradients, py::arg("h"), py::arg("model_class"), py::arg("data"));
    m.def("fit", &fit, py::arg("h0"), py::arg("model_class"), py::arg("data"),
          py::arg("config"));
    m.def("subspace_fit", &subspace_fit, py::arg("h0"), py::arg("embedding"),
          py::arg("model_class"), py::arg("data"), py::arg("config"));

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &ScenarioConfig::scenario)
        .def_readwrite("seed", &ScenarioConfig::seed)
        .def_readwrite("output_dir", &ScenarioConfig::output_dir)
        .def_readwrite("epochs", &ScenarioConfig::epochs);

    m.def("scenario_names", &scenario_names);
    m.def("run_scenario", &run_scenario, py::arg("config"));
}
