#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "harmoniums/conjugation.hpp"
#include "harmoniums/errors.hpp"
#include "harmoniums/scenarios.hpp"
#include "harmoniums/special.hpp"

namespace {

// Flat key=value config file; '#' starts a comment. Flags win over the file.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CLI::FileError::Missing(path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            continue;
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

// Draws probe points from the latent prior for conjugation verification.
std::vector<harmoniums::Observation> draw_probes(const harmoniums::Harmonium& h, int count,
                                                 std::uint64_t seed) {
    using namespace harmoniums;
    // Enumerable latents: cycle the full support so the probe design always
    // spans the statistic space. Otherwise sample from theta_z itself, which
    // keeps probes in a plausible region without needing the conjugation
    // parameters first.
    try {
        const auto states = enumerate_support(h.lat);
        std::vector<Observation> probes;
        for (int i = 0; i < count; ++i)
            probes.push_back(states[std::size_t(i) % states.size()]);
        return probes;
    } catch (const harmoniums::unsupported_error&) {
        return sample(h.lat, h.theta_z, seed, count);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conjugated harmonium experiments"};
    app.require_subcommand(1);

    harmoniums::ScenarioConfig config;
    std::string config_file;
    int epochs = -1;
    auto* run = app.add_subcommand("run", "Run a scenario and write its data files");
    run->add_option("--scenario", config.scenario, "Scenario name")
        ->check(CLI::IsMember(harmoniums::scenario_names()));
    run->add_option("--seed", config.seed, "Random seed");
    run->add_option("--out", config.output_dir, "Output directory");
    run->add_option("--epochs", epochs, "Override the scenario's training epochs");
    run->add_option("--config", config_file, "Flat key=value config file; flags win");

    std::string model_path;
    int probes = 100;
    std::uint64_t verify_seed = 42;
    auto* verify = app.add_subcommand("verify", "Check the conjugation identity of a model");
    verify->add_option("--model", model_path, "Model JSON file")->required();
    verify->add_option("--probes", probes, "Number of latent probe points");
    verify->add_option("--seed", verify_seed, "Random seed for the probes");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (!config_file.empty()) {
                const auto kv = read_config(config_file);
                if (auto it = kv.find("scenario"); it != kv.end() && !run->count("--scenario"))
                    config.scenario = it->second;
                if (auto it = kv.find("seed"); it != kv.end() && !run->count("--seed"))
                    config.seed = std::stoull(it->second);
                if (auto it = kv.find("out"); it != kv.end() && !run->count("--out"))
                    config.output_dir = it->second;
                if (auto it = kv.find("epochs"); it != kv.end() && !run->count("--epochs"))
                    epochs = std::stoi(it->second);
            }
            if (config.scenario.empty())
                throw CLI::RequiredError("--scenario");
            if (epochs >= 0)
                config.epochs = epochs;
            harmoniums::run_scenario(config);
            std::cout << "scenario " << config.scenario << " written to " << config.output_dir
                      << "\n";
            return 0;
        }
        std::ifstream in(model_path);
        if (!in) {
            std::cerr << "cannot open model file: " << model_path << "\n";
            return 1;
        }
        std::ostringstream text;
        text << in.rdbuf();
        const harmoniums::Harmonium h = harmoniums::harmonium_from_json(text.str());
        const auto z_probes = draw_probes(h, probes, verify_seed);
        const auto [c, residual] = harmoniums::fit_conjugation(h, z_probes);
        std::cout << "conjugation residual over " << probes << " probes: " << residual << "\n";
        if (residual > 1e-6) {
            std::cerr << "model is not conjugated (residual > 1e-6)\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
