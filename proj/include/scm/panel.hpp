#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "scm/errors.hpp"

namespace scm {

// Balanced unit x period outcome panel with a block treatment date.
// Periods 1..t0 are pretreatment, t0+1..T are post. Immutable after
// construction; validation happens once in create().
class PanelDataset {
public:
    // Empty panel; only create() produces a validated instance.
    PanelDataset() = default;

    static PanelDataset create(Eigen::MatrixXd outcomes, Eigen::ArrayXd treated,
                               int t0, std::vector<std::string> unit_ids = {});

    int n() const { return static_cast<int>(outcomes_.rows()); }
    int periods() const { return static_cast<int>(outcomes_.cols()); }
    int t0() const { return t0_; }
    int k_post() const { return periods() - t0_ - 1; }
    int n_treated() const { return n1_; }
    double pi_bar() const { return static_cast<double>(n1_) / n(); }

    const Eigen::MatrixXd& outcomes() const { return outcomes_; }
    // 0/1 indicator vector D_i, aligned with rows of outcomes().
    const Eigen::ArrayXd& treated() const { return treated_; }
    const std::vector<std::string>& unit_ids() const { return unit_ids_; }

    Eigen::MatrixXd pre_block() const { return outcomes_.leftCols(t0_); }

private:
    Eigen::MatrixXd outcomes_;
    Eigen::ArrayXd treated_;
    std::vector<std::string> unit_ids_;
    int t0_ = 0;
    int n1_ = 0;
};

// Long-format CSV (unit,time,outcome,treated). Times are re-indexed to
// 1..T by sorted order; units keep first-appearance order. t0 comes from
// the caller, never from the file.
PanelDataset load_panel_csv(const std::string& path, int t0);
void write_panel_csv(const PanelDataset& data, const std::string& path);

// Wide layout (one row per unit), debugging aid only; the loader does not
// read it back.
void write_panel_wide_csv(const PanelDataset& data, const std::string& path);

}  // namespace scm
