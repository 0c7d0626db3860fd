#include "skew/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <thread>

#include "skew/errors.hpp"
#include "skew/rng.hpp"

namespace skew {

namespace {
const double kInf = std::numeric_limits<double>::infinity();
} // namespace

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SKEW_NUM_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// ---------------------------------------------------------------------------
// NaturalScale
// ---------------------------------------------------------------------------

void NaturalScale::refine_rec(const DensityProfile& p, double c, double x1, double s1,
                              double x2, double tol, int depth) {
    double mid = 0.5 * (x1 + x2);
    double s_mid = s1 + p.integral_inside(x1, mid, true) / c;
    double s2 = s_mid + p.integral_inside(mid, x2, true) / c;
    if (depth >= 14 || std::abs(0.5 * (s1 + s2) - s_mid) < tol * (1 + std::abs(s2))) {
        kx_.push_back(mid);
        ks_.push_back(s_mid);
        kx_.push_back(x2);
        ks_.push_back(s2);
        return;
    }
    refine_rec(p, c, x1, s1, mid, tol, depth + 1);
    refine_rec(p, c, mid, ks_.back(), x2, tol, depth + 1);
}

NaturalScale::NaturalScale(const SkewDensity& rho, const EffectiveInterval& iv, double tol)
    : iv_(iv) {
    img_lo_ = iv.image_lo;
    img_hi_ = iv.image_hi;
    reflect_lo_ = iv.closed_lo;
    reflect_hi_ = iv.closed_hi;

    // breakpoints: member boundaries, refs, atoms, density piece edges
    std::vector<double> xs;
    auto push = [&](double v) {
        if (std::isfinite(v) && v > iv.lo && v < iv.hi) xs.push_back(v);
    };
    push(iv.ref);
    const auto& ivs = rho.decomposition().intervals;
    for (size_t k : iv.members) {
        const GInterval& g = ivs[k];
        push(g.lo);
        push(g.hi);
        push(g.ref);
        for (const Atom& atom : rho.profile(k).interior_atoms()) push(atom.pos);
    }
    for (const auto& piece : rho.measure().density_pieces()) {
        push(piece.iv.lo);
        push(piece.iv.hi);
    }
    double span = 1.0;
    for (double v : xs) span = std::max(span, std::abs(v));
    // cover unbounded ends generously; approach finite ends geometrically so
    // reflection and saturation levels are resolved
    if (!std::isfinite(iv.lo)) {
        for (double d = 1; d <= 20e6; d *= 2) push(iv.ref - span * d);
    } else {
        double anchor = std::min(iv.ref, iv.hi);
        for (double d = 0.25; d >= 1e-9; d *= 0.25) push(iv.lo + (anchor - iv.lo) * d);
    }
    if (!std::isfinite(iv.hi)) {
        for (double d = 1; d <= 20e6; d *= 2) push(iv.ref + span * d);
    } else {
        double anchor = std::max(iv.ref, iv.lo);
        for (double d = 0.25; d >= 1e-9; d *= 0.25) push(iv.hi - (iv.hi - anchor) * d);
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    if (xs.size() < 2) throw Error("degenerate effective interval");

    auto member_of = [&](double x) -> int {
        for (size_t k : iv.members)
            if (x >= ivs[k].lo && x <= ivs[k].hi) return static_cast<int>(k);
        return -1;
    };

    kx_.clear();
    ks_.clear();
    kx_.push_back(xs[0]);
    ks_.push_back(0.0);
    for (size_t i = 0; i + 1 < xs.size(); i++) {
        double x1 = xs[i], x2 = xs[i + 1];
        int k = member_of(0.5 * (x1 + x2));
        if (k < 0) { // a removed point between members, measure zero
            kx_.push_back(x2);
            ks_.push_back(ks_.back());
            continue;
        }
        const DensityProfile& p = rho.profile(static_cast<size_t>(k));
        bool flat = true; // piecewise-constant rho between breakpoints
        for (const auto& piece : rho.measure().density_pieces()) {
            if (std::min(x2, piece.iv.hi) > std::max(x1, piece.iv.lo)) flat = false;
        }
        double c = rho.constants()[static_cast<size_t>(k)];
        if (flat) {
            double s2 = ks_.back() + p.integral_inside(x1, x2, true) / c;
            kx_.push_back(x2);
            ks_.push_back(s2);
        } else {
            refine_rec(p, c, x1, ks_.back(), x2, tol, 0);
        }
    }

    // convention: f vanishes at 0 when 0 is interior, else at the ref point
    double base = (iv.lo < 0.0 && iv.hi > 0.0) ? 0.0 : iv.ref;
    kh_.assign(kx_.size(), 0.0);
    for (size_t i = 0; i + 1 < kx_.size(); i++) {
        double ds = ks_[i + 1] - ks_[i];
        double dx = kx_[i + 1] - kx_[i];
        kh_[i] = ds > 0 && dx > 0 ? ds / dx : 0.0;
    }
    if (kx_.size() >= 2) kh_[kx_.size() - 1] = kh_[kx_.size() - 2];
    double shift = f_raw(base);
    for (double& v : ks_) v -= shift;
}

double NaturalScale::f_raw(double x) const {
    auto it = std::upper_bound(kx_.begin(), kx_.end(), x);
    if (it == kx_.begin()) return ks_.front() + (x - kx_.front()) * kh_.front();
    size_t idx = static_cast<size_t>(it - kx_.begin()) - 1;
    if (idx + 1 >= kx_.size()) return ks_.back() + (x - kx_.back()) * kh_.back();
    return ks_[idx] + (x - kx_[idx]) * kh_[idx];
}

double NaturalScale::f(double x) const { return f_raw(x); }

double NaturalScale::g(double z) const {
    if (z <= ks_.front()) {
        if (!std::isfinite(iv_.lo) && kh_.front() > 0)
            return kx_.front() + (z - ks_.front()) / kh_.front();
        return kx_.front(); // saturation toward the image edge
    }
    if (z >= ks_.back()) {
        if (!std::isfinite(iv_.hi) && kh_.back() > 0)
            return kx_.back() + (z - ks_.back()) / kh_.back();
        return kx_.back();
    }
    auto it = std::upper_bound(ks_.begin(), ks_.end(), z);
    size_t idx = static_cast<size_t>(it - ks_.begin()) - 1;
    double ds = ks_[idx + 1] - ks_[idx];
    if (!(ds > 0)) return kx_[idx];
    double t = (z - ks_[idx]) / ds;
    return kx_[idx] + t * (kx_[idx + 1] - kx_[idx]);
}

double NaturalScale::h(double z) const {
    if (z < ks_.front()) return 1.0 / kh_.front();
    if (z >= ks_.back()) return 1.0 / kh_.back();
    auto it = std::upper_bound(ks_.begin(), ks_.end(), z);
    size_t idx = static_cast<size_t>(it - ks_.begin()) - 1;
    // dx/ds of the broken line is rho along the segment, so h = ds/dx inverted
    return kh_[idx] > 0 ? (kx_[idx + 1] - kx_[idx]) / (ks_[idx + 1] - ks_[idx]) : 0.0;
}

// ---------------------------------------------------------------------------
// Path simulation
// ---------------------------------------------------------------------------

namespace {

std::vector<double> make_save_times(double T, int save_points) {
    std::vector<double> t;
    int n = std::max(save_points, 1);
    for (int i = 0; i <= n; i++) t.push_back(T * i / n);
    return t;
}

void run_blocks(int n_paths, int threads, const std::function<void(int, int)>& block) {
    if (threads <= 1) {
        block(0, n_paths);
        return;
    }
    std::vector<std::thread> pool;
    int chunk = (n_paths + threads - 1) / threads;
    for (int t = 0; t < threads; t++) {
        int lo = t * chunk, hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(block, lo, hi);
    }
    for (auto& th : pool) th.join();
}

} // namespace

PathEnsemble simulate_paths(const NaturalScale& transform, const SkewDensity& rho,
                            double x0, double T, double dt, int n_paths, uint64_t seed,
                            const SimOptions& opts) {
    if (!(dt > 0) || !(T > 0) || n_paths <= 0) throw Error("invalid simulation parameters");
    double diam = transform.image_hi() - transform.image_lo();
    if (std::isfinite(diam) && dt > std::pow(diam / 100.0, 2))
        throw StepTooCoarse("dt exceeds (scale diameter / 100)^2");
    if (!(x0 >= transform.domain_lo() && x0 <= transform.domain_hi()))
        throw Error("x0 outside the effective interval");

    PathEnsemble out;
    out.scheme = "euler_natural_scale";
    out.x0 = x0;
    out.T = T;
    out.step = dt;
    out.n_paths = n_paths;
    out.seed = seed;
    out.save_times = make_save_times(T, opts.save_points);
    out.states.assign(out.save_times.size(), std::vector<double>(n_paths, 0.0));
    out.terminal.assign(n_paths, 0.0);
    out.lt_probes = opts.lt_probes;
    out.lt_values.assign(opts.lt_probes.size(), std::vector<double>(n_paths, 0.0));
    out.has_drift = opts.drift_probe;

    const long n_steps = std::lround(T / dt);
    const double sqdt = std::sqrt(dt);
    const double z0 = transform.f(x0);
    const double zlo = transform.image_lo(), zhi = transform.image_hi();
    const bool rlo = transform.reflect_lo(), rhi = transform.reflect_hi();

    std::vector<Atom> drift_atoms;
    double drift_eps = opts.drift_eps;
    if (opts.drift_probe) {
        for (const Atom& atom : rho.measure().atoms())
            if (std::abs(atom.weight) < 1.0) drift_atoms.push_back(atom);
        if (drift_eps <= 0) drift_eps = 2.0 * sqdt;
        out.drift_residual.assign(n_paths, 0.0);
        out.drift_weighted_lt.assign(n_paths, 0.0);
        out.drift_eps = drift_eps;
    }
    for (const LocalTimeProbe& probe : opts.lt_probes) {
        if (probe.eps < 2 * sqdt)
            throw WindowTooNarrow("window must span several natural-scale steps");
    }

    const bool need_x = !opts.lt_probes.empty() || opts.drift_probe;
    const size_t n_saves = out.save_times.size();
    std::vector<long> save_steps(n_saves);
    for (size_t i = 0; i < n_saves; i++)
        save_steps[i] = std::lround(out.save_times[i] / dt);

    auto block = [&](int lo, int hi) {
        for (int p = lo; p < hi; p++) {
            Rng rng = Rng::substream(seed, static_cast<uint64_t>(p));
            double Z = z0;
            double mart = 0;
            bool frozen = false;
            std::vector<double> win(opts.lt_probes.size(), 0.0);
            std::vector<double> dwin(drift_atoms.size(), 0.0);
            size_t save_cursor = 0;
            for (long k = 0; k <= n_steps; k++) {
                while (save_cursor < n_saves && k == save_steps[save_cursor]) {
                    out.states[save_cursor][p] = transform.g(Z);
                    save_cursor++;
                }
                if (k == n_steps) break;
                if (need_x && !frozen) {
                    double X = transform.g(Z);
                    double t = k * dt;
                    for (size_t q = 0; q < opts.lt_probes.size(); q++) {
                        const LocalTimeProbe& probe = opts.lt_probes[q];
                        if (t < probe.at && std::abs(X - probe.z) < probe.eps)
                            win[q] += dt;
                    }
                    for (size_t q = 0; q < drift_atoms.size(); q++)
                        if (std::abs(X - drift_atoms[q].pos) < drift_eps) dwin[q] += dt;
                }
                double dW = sqdt * rng.normal();
                if (!frozen) {
                    Z += transform.h(Z) * dW;
                    mart += dW;
                    for (int fold = 0; fold < 2; fold++) {
                        if (Z > zhi) {
                            if (rhi) Z = 2 * zhi - Z;
                            else { Z = zhi; frozen = true; }
                        }
                        if (Z < zlo) {
                            if (rlo) Z = 2 * zlo - Z;
                            else { Z = zlo; frozen = true; }
                        }
                    }
                }
            }
            double XT = transform.g(Z);
            out.terminal[p] = XT;
            for (size_t q = 0; q < opts.lt_probes.size(); q++)
                out.lt_values[q][p] = win[q] / (2 * opts.lt_probes[q].eps);
            if (opts.drift_probe) {
                out.drift_residual[p] = XT - x0 - mart;
                double wlt = 0;
                for (size_t q = 0; q < drift_atoms.size(); q++)
                    wlt += drift_atoms[q].weight * dwin[q] / (2 * drift_eps);
                out.drift_weighted_lt[p] = wlt;
            }
        }
    };
    run_blocks(n_paths, resolve_thread_count(opts.threads), block);
    return out;
}

PathEnsemble simulate_grid_walk(const CheckedMeasure& m, double x0, double T,
                                double hgrid, int n_paths, uint64_t seed,
                                const SimOptions& opts) {
    if (!(hgrid > 0) || !(T > 0) || n_paths <= 0) throw Error("invalid walk parameters");
    if (!m.rules().empty() || !m.density_pieces().empty() ||
        !m.declared_infinite_regions().empty())
        throw Error("grid walk requires a purely atomic measure with finitely many atoms");

    std::vector<std::pair<long, double>> site_weights;
    for (const Atom& atom : m.atoms()) {
        double idx = (atom.pos - x0) / hgrid;
        long j = std::lround(idx);
        if (std::abs(idx - j) > 1e-9)
            throw AtomOffGrid("atom does not sit on the simulation grid");
        if (std::abs(atom.weight) >= 1.0)
            throw AtomOffGrid("grid walk requires |weight| < 1 at every atom");
        site_weights.push_back({j, atom.weight});
    }
    std::sort(site_weights.begin(), site_weights.end());
    auto weight_at = [&](long j) {
        auto it = std::lower_bound(site_weights.begin(), site_weights.end(),
                                   std::make_pair(j, -2.0));
        if (it != site_weights.end() && it->first == j) return it->second;
        return 0.0;
    };

    long n_steps = std::lround(T / (hgrid * hgrid));
    if (n_steps < 1) n_steps = 1;
    if (n_steps % 2 == 0) n_steps++; // odd: the walk cannot terminate on its start site
    const double dt_step = T / static_cast<double>(n_steps);

    PathEnsemble out;
    out.scheme = "grid_walk";
    out.x0 = x0;
    out.T = T;
    out.step = hgrid;
    out.n_paths = n_paths;
    out.seed = seed;
    out.save_times = make_save_times(T, opts.save_points);
    out.states.assign(out.save_times.size(), std::vector<double>(n_paths, 0.0));
    out.terminal.assign(n_paths, 0.0);
    out.lt_probes = opts.lt_probes;
    out.lt_values.assign(opts.lt_probes.size(), std::vector<double>(n_paths, 0.0));
    out.has_drift = opts.drift_probe;

    double drift_eps = opts.drift_eps;
    if (opts.drift_probe) {
        if (drift_eps <= 0) drift_eps = 3.5 * hgrid; // lattice-aligned window
        out.drift_residual.assign(n_paths, 0.0);
        out.drift_weighted_lt.assign(n_paths, 0.0);
        out.drift_eps = drift_eps;
    }
    for (const LocalTimeProbe& probe : opts.lt_probes) {
        if (probe.eps < 2 * hgrid)
            throw WindowTooNarrow("window must span several grid cells");
    }

    const size_t n_saves = out.save_times.size();
    std::vector<long> save_steps(n_saves);
    for (size_t i = 0; i < n_saves; i++)
        save_steps[i] = std::lround(out.save_times[i] / dt_step);

    auto block = [&](int lo, int hi) {
        for (int p = lo; p < hi; p++) {
            Rng rng = Rng::substream(seed, static_cast<uint64_t>(p));
            long j = 0;
            double residual = 0;
            std::vector<double> win(opts.lt_probes.size(), 0.0);
            std::vector<double> dwin(site_weights.size(), 0.0);
            size_t save_cursor = 0;
            for (long k = 0; k <= n_steps; k++) {
                double X = x0 + j * hgrid;
                while (save_cursor < n_saves && k == save_steps[save_cursor]) {
                    out.states[save_cursor][p] = X;
                    save_cursor++;
                }
                if (k == n_steps) break;
                double t = k * dt_step;
                for (size_t q = 0; q < opts.lt_probes.size(); q++) {
                    const LocalTimeProbe& probe = opts.lt_probes[q];
                    if (t < probe.at && std::abs(X - probe.z) < probe.eps)
                        win[q] += hgrid * hgrid;
                }
                if (out.has_drift) {
                    for (size_t q = 0; q < site_weights.size(); q++) {
                        double pos = x0 + site_weights[q].first * hgrid;
                        if (std::abs(X - pos) < drift_eps) dwin[q] += hgrid * hgrid;
                    }
                }
                double w = weight_at(j);
                if (w != 0.0) residual += hgrid * w; // E[dX | at the atom]
                j += (rng.uniform01() < (1.0 + w) / 2.0) ? 1 : -1;
            }
            out.terminal[p] = x0 + j * hgrid;
            for (size_t q = 0; q < opts.lt_probes.size(); q++)
                out.lt_values[q][p] = win[q] / (2 * opts.lt_probes[q].eps);
            if (opts.drift_probe) {
                out.drift_residual[p] = residual;
                double wlt = 0;
                for (size_t q = 0; q < site_weights.size(); q++)
                    wlt += site_weights[q].second * dwin[q] / (2 * drift_eps);
                out.drift_weighted_lt[p] = wlt;
            }
        }
    };
    run_blocks(n_paths, resolve_thread_count(opts.threads), block);
    return out;
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

Estimate estimate_occupation(const PathEnsemble& e, double lo, double hi, double at) {
    size_t best = 0;
    double bd = kInf;
    for (size_t i = 0; i < e.save_times.size(); i++) {
        double d = std::abs(e.save_times[i] - at);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    const std::vector<double>& xs = e.states[best];
    long hits = 0;
    for (double x : xs)
        if (x > lo && x < hi) hits++;
    double p = static_cast<double>(hits) / xs.size();
    Estimate est;
    est.value = p;
    est.stderr_ = std::sqrt(std::max(p * (1 - p), 1e-12) / xs.size());
    return est;
}

LocalTimeEstimate estimate_local_time(const PathEnsemble& e, double z, double eps,
                                      double at) {
    for (size_t q = 0; q < e.lt_probes.size(); q++) {
        const LocalTimeProbe& probe = e.lt_probes[q];
        if (probe.z == z && probe.eps == eps && probe.at == at) {
            LocalTimeEstimate out;
            out.z = z;
            out.eps = eps;
            out.at = at;
            out.per_path = e.lt_values[q];
            double s = 0, s2 = 0;
            for (double v : out.per_path) {
                s += v;
                s2 += v * v;
            }
            double n = static_cast<double>(out.per_path.size());
            out.mean = s / n;
            out.stderr_ = std::sqrt(std::max(s2 / n - out.mean * out.mean, 0.0) / n);
            return out;
        }
    }
    throw Error("local-time window (z, eps, at) was not registered for this ensemble");
}

DriftReport drift_consistency_check(const PathEnsemble& e) {
    if (!e.has_drift) throw Error("ensemble was simulated without the drift probe");
    DriftReport rep;
    rep.n_paths = e.n_paths;
    double n = static_cast<double>(e.n_paths);
    double sr = 0, sr2 = 0, sl = 0, sl2 = 0, sd = 0, sd2 = 0;
    for (int p = 0; p < e.n_paths; p++) {
        double r = e.drift_residual[p];
        double l = e.drift_weighted_lt[p];
        double d = r - l;
        sr += r;
        sr2 += r * r;
        sl += l;
        sl2 += l * l;
        sd += d;
        sd2 += d * d;
    }
    rep.residual_mean = sr / n;
    rep.weighted_lt_mean = sl / n;
    rep.diff_mean = sd / n;
    rep.residual_se =
        std::sqrt(std::max(sr2 / n - rep.residual_mean * rep.residual_mean, 0.0) / n);
    rep.weighted_lt_se =
        std::sqrt(std::max(sl2 / n - rep.weighted_lt_mean * rep.weighted_lt_mean, 0.0) / n);
    rep.diff_se = std::sqrt(std::max(sd2 / n - rep.diff_mean * rep.diff_mean, 0.0) / n);
    rep.combined_se = std::sqrt(rep.residual_se * rep.residual_se +
                                rep.weighted_lt_se * rep.weighted_lt_se);
    return rep;
}

} // namespace skew
