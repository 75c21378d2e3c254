#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <string>

#include "scm/balancer.hpp"
#include "scm/panel.hpp"
#include "scm/rng.hpp"

namespace testutil {

inline std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

inline scm::PanelDataset make_panel(const Eigen::MatrixXd& outcomes,
                                    std::initializer_list<double> treated, int t0) {
    Eigen::ArrayXd d(static_cast<Eigen::Index>(treated.size()));
    Eigen::Index i = 0;
    for (double v : treated) d[i++] = v;
    return scm::PanelDataset::create(outcomes, d, t0);
}

// Gaussian panel with a logistic assignment on the last pre period; produces
// generic balancer instances with overlap.
struct RandomInstance {
    scm::FeatureMatrix features;
    Eigen::ArrayXd treated;
};

inline RandomInstance random_instance(std::uint64_t seed, int n, int p) {
    RandomInstance inst;
    inst.features.values.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j)
            inst.features.values(i, j) = scm::rng::normal(seed, scm::rng::kTestData,
                                                          static_cast<std::uint64_t>(i),
                                                          static_cast<std::uint64_t>(j));
    inst.features.names.resize(p, "x");
    inst.features.centers = Eigen::VectorXd::Zero(p);
    inst.features.scales = Eigen::VectorXd::Ones(p);
    inst.features.zero_variance.assign(p, 0);
    inst.treated.resize(n);
    int n1 = 0;
    for (int i = 0; i < n; ++i) {
        double score = p > 0 ? inst.features.values(i, 0) : 0.0;
        double pi = 1.0 / (1.0 + std::exp(-0.5 * score));
        inst.treated[i] =
            scm::rng::uniform(seed, scm::rng::kTestData, 1000000 + i, 7) < pi ? 1.0 : 0.0;
        n1 += inst.treated[i] == 1.0;
    }
    if (n1 == 0) inst.treated[0] = 1.0;
    if (n1 == n) inst.treated[n - 1] = 0.0;
    return inst;
}

}  // namespace testutil
