#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skew/structure.hpp"

namespace skew {

/// Natural-scale transform of one effective interval:
///   f(z) = int_base^z 1/rho,  g = f^{-1} (saturated at a finite image edge),
///   h = (1/rho) o g  (right-continuous).
/// f is modelled by a monotone broken line refined until the interpolation
/// error is below tol; segments where rho is piecewise constant are exact.
class NaturalScale {
public:
    NaturalScale(const SkewDensity& rho, const EffectiveInterval& iv, double tol = 1e-11);

    double f(double x) const;
    double g(double z) const;
    double h(double z) const;

    double image_lo() const { return img_lo_; }
    double image_hi() const { return img_hi_; }
    bool reflect_lo() const { return reflect_lo_; }
    bool reflect_hi() const { return reflect_hi_; }
    double domain_lo() const { return iv_.lo; }
    double domain_hi() const { return iv_.hi; }

private:
    double f_raw(double x) const;
    void refine_rec(const DensityProfile& p, double c, double x1, double s1, double x2,
                    double tol, int depth);
    EffectiveInterval iv_;
    double img_lo_, img_hi_;
    bool reflect_lo_, reflect_hi_;
    std::vector<double> kx_, ks_, kh_; // knots: x, s = f(x), h on [s_i, s_{i+1})
};

struct LocalTimeProbe {
    double z;
    double eps;
    double at;
};

struct SimOptions {
    int save_points = 8;                    // saved times 0, T/n, ..., T
    std::vector<LocalTimeProbe> lt_probes;  // window estimators accumulated per step
    bool drift_probe = false;               // Tanaka residual vs sum mu_z * Lhat^z
    double drift_eps = 0.0;                 // 0: pick a default from the step scale
    int threads = 0;                        // 0: SKEW_NUM_THREADS or hardware
};

struct PathEnsemble {
    std::string scheme; // euler_natural_scale | grid_walk
    double x0 = 0, T = 0, step = 0;
    int n_paths = 0;
    uint64_t seed = 0;
    std::vector<double> save_times;
    std::vector<std::vector<double>> states; // [save_index][path]
    std::vector<double> terminal;            // [path]
    std::vector<LocalTimeProbe> lt_probes;
    std::vector<std::vector<double>> lt_values; // [probe][path]
    bool has_drift = false;
    double drift_eps = 0;
    std::vector<double> drift_residual; // [path]: X_T - x0 - martingale part
    std::vector<double> drift_weighted_lt; // [path]: sum_z mu_z * Lhat^z_T
};

/// Euler-Maruyama in natural scale: dZ = h(Z) dW, X = g(Z); adjoined
/// endpoints reflect (|.|-folding in scale), open finite image edges saturate.
PathEnsemble simulate_paths(const NaturalScale& transform, const SkewDensity& rho,
                            double x0, double T, double dt, int n_paths, uint64_t seed,
                            const SimOptions& opts = {});

/// Independent oracle: nearest-neighbour walk with right-step probability
/// (1 + mu_z)/2 at atoms, time step hgrid^2 (step count rounded odd so the
/// walk cannot sit on 0 at the terminal time).
PathEnsemble simulate_grid_walk(const CheckedMeasure& m, double x0, double T,
                                double hgrid, int n_paths, uint64_t seed,
                                const SimOptions& opts = {});

struct Estimate {
    double value = 0;
    double stderr_ = 0;
};

/// Fraction of paths inside (lo, hi) at the saved time nearest to `at`.
Estimate estimate_occupation(const PathEnsemble& e, double lo, double hi, double at);

struct LocalTimeEstimate {
    double z = 0, eps = 0, at = 0;
    double mean = 0;
    double stderr_ = 0;
    std::vector<double> per_path;
};

/// Looks up the registered window estimator for (z, eps, at).
LocalTimeEstimate estimate_local_time(const PathEnsemble& e, double z, double eps,
                                      double at);

struct DriftReport {
    double residual_mean = 0, residual_se = 0;
    double weighted_lt_mean = 0, weighted_lt_se = 0;
    double diff_mean = 0, diff_se = 0; // paired residual - sum mu_z Lhat
    double combined_se = 0;            // sqrt(se_res^2 + se_lt^2)
    int n_paths = 0;
};

/// Compares the per-path Tanaka residual against sum_z mu_z * Lhat^z_T.
DriftReport drift_consistency_check(const PathEnsemble& e);

int resolve_thread_count(int requested);

} // namespace skew
