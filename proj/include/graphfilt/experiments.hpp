#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "graphfilt/arma.hpp"
#include "graphfilt/cg.hpp"
#include "graphfilt/core.hpp"
#include "graphfilt/design.hpp"
#include "graphfilt/fir.hpp"
#include "graphfilt/graph.hpp"
#include "graphfilt/io.hpp"
#include "graphfilt/random.hpp"
#include "graphfilt/spectral.hpp"

namespace graphfilt {

// ---------------------------------------------------------------- signals

/// Indices of the lowest `fraction` of frequencies; a conjugate pair is taken whole.
inline std::vector<Eigen::Index> low_band(const SpectralDecomposition& dec, ShiftKind kind, double fraction) {
    const auto order = order_frequencies(dec, kind);
    const auto want = static_cast<std::size_t>(std::max(1.0, std::round(fraction * static_cast<double>(dec.size()))));
    std::vector<Eigen::Index> band;
    for (std::size_t i = 0; i < order.size() && band.size() < want; ++i) {
        band.push_back(order[i]);
        if (!dec.pairing.is_real(order[i]) && i + 1 < order.size()) band.push_back(order[++i]);
    }
    return band;
}

/// White noise passed through an ideal spectral mask on the lowest frequencies,
/// scaled to unit root mean square.
inline Vec smooth_signal(const SpectralDecomposition& dec, ShiftKind kind, Rng& rng, double fraction = 0.25) {
    const Vec w = rng.normal_vector(dec.size());
    const CVec what = gft(dec, w);
    CVec masked = CVec::Zero(dec.size());
    for (auto i : low_band(dec, kind, fraction)) masked(i) = what(i);
    Vec x = igft(dec, masked).real();
    const double rms = x.norm() / std::sqrt(static_cast<double>(x.size()));
    return rms > 0.0 ? Vec(x / rms) : x;
}

/// Uniform positions in the unit square.
inline std::vector<Point2> random_coords(std::size_t n, Rng& rng) {
    std::vector<Point2> pts(n);
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    return pts;
}

/// Directed 6-nearest-neighbor geometric graph on random coordinates, with its
/// max-symmetrized undirected companion.
struct GeometricGraphs {
    std::vector<Point2> coords;
    Graph directed;
    Graph undirected;
};

inline GeometricGraphs geometric_graphs(std::size_t n, std::size_t k, std::uint64_t seed) {
    Rng rng(seed);
    GeometricGraphs g;
    g.coords = random_coords(n, rng);
    g.directed = build_knn_directed(g.coords, k);
    g.undirected = symmetrize_max(g.directed);
    return g;
}

/// Long-format signal table `node_id,timestamp,value` pivoted to nodes × timestamps.
/// Missing entries are NaN.
struct SignalTable {
    std::vector<std::string> timestamps;
    Mat values;
};

inline SignalTable parse_signal_csv(const std::string& text, std::size_t n = 0, const std::string& source = "<signals>") {
    const auto csv = io::parse_csv(text, {"node_id", "timestamp", "value"}, source);
    std::map<std::string, Eigen::Index> ts;
    std::size_t max_node = 0;
    for (const auto& row : csv.rows) ts.emplace(row[1], 0);
    SignalTable t;
    for (auto& [k, v] : ts) {
        v = static_cast<Eigen::Index>(t.timestamps.size());
        t.timestamps.push_back(k);
    }
    std::vector<std::tuple<std::size_t, Eigen::Index, double>> cells;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto ctx = io::where(source, csv.lines[r]);
        const long long node = io::parse_int(csv.rows[r][0], ctx);
        if (node < 0) throw Error(ErrorKind::parse, ctx + ": negative node id");
        cells.emplace_back(static_cast<std::size_t>(node), ts[csv.rows[r][1]], io::parse_double(csv.rows[r][2], ctx));
        max_node = std::max(max_node, static_cast<std::size_t>(node));
    }
    const std::size_t nodes = n ? n : (cells.empty() ? 0 : max_node + 1);
    if (n && max_node >= n && !cells.empty()) throw Error(ErrorKind::parse, source + ": node id exceeds graph size");
    t.values = Mat::Constant(static_cast<Eigen::Index>(nodes), static_cast<Eigen::Index>(t.timestamps.size()),
                             std::numeric_limits<double>::quiet_NaN());
    for (auto [node, col, v] : cells) t.values(static_cast<Eigen::Index>(node), col) = v;
    return t;
}

/// Single signal as `node_id,value`.
inline Vec parse_signal_vector_csv(const std::string& text, const std::string& source = "<signal>") {
    const auto csv = io::parse_csv(text, {"node_id", "value"}, source);
    Vec x(static_cast<Eigen::Index>(csv.rows.size()));
    std::vector<bool> seen(csv.rows.size(), false);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto ctx = io::where(source, csv.lines[r]);
        const long long id = io::parse_int(csv.rows[r][0], ctx);
        if (id < 0 || static_cast<std::size_t>(id) >= csv.rows.size() || seen[static_cast<std::size_t>(id)])
            throw Error(ErrorKind::parse, ctx + ": node id out of range or repeated");
        seen[static_cast<std::size_t>(id)] = true;
        x(id) = io::parse_double(csv.rows[r][1], ctx);
    }
    return x;
}

inline std::string signal_vector_to_csv(const Vec& x) {
    std::string out = "node_id,value\n";
    for (Eigen::Index i = 0; i < x.size(); ++i) out += std::to_string(i) + "," + io::fmt(x(i)) + "\n";
    return out;
}

// ---------------------------------------------------------------- reports

struct ExperimentRow {
    std::string experiment;
    Eigen::Index K = 0;
    Eigen::Index P = 0;
    Eigen::Index Q = 0;
    std::string method;
    double rnmse_mean = 0.0;
    double rnmse_std = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> trials;
};

struct ExperimentReport {
    std::vector<ExperimentRow> rows;
    nlohmann::json config = nlohmann::json::object();

    const ExperimentRow* find(const std::string& method, Eigen::Index K) const {
        for (const auto& r : rows)
            if (r.method == method && r.K == K) return &r;
        return nullptr;
    }
};

/// Sample mean and standard deviation (n-1 denominator; zero for a single trial).
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) return {m, 0.0};
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

inline ExperimentRow make_row(const std::string& exp, const std::string& method, Eigen::Index K,
                              std::vector<double> trials, const std::vector<std::pair<Eigen::Index, Eigen::Index>>& orders,
                              std::uint64_t seed) {
    ExperimentRow r;
    r.experiment = exp;
    r.method = method;
    r.K = K;
    r.seed = seed;
    std::tie(r.rnmse_mean, r.rnmse_std) = mean_std(trials);
    r.trials = std::move(trials);
    // most frequent order, ties to the smaller (P, Q)
    std::map<std::pair<Eigen::Index, Eigen::Index>, int> count;
    for (const auto& o : orders) ++count[o];
    int best = -1;
    for (const auto& [o, c] : count)
        if (c > best) {
            best = c;
            r.P = o.first;
            r.Q = o.second;
        }
    return r;
}

inline std::string report_to_csv(const ExperimentReport& rep) {
    std::string out = "experiment,K,P,Q,method,rnmse_mean,rnmse_std,seed\n";
    for (const auto& r : rep.rows)
        out += r.experiment + "," + std::to_string(r.K) + "," + std::to_string(r.P) + "," + std::to_string(r.Q) + "," +
               r.method + "," + io::fmt(r.rnmse_mean) + "," + io::fmt(r.rnmse_std) + "," + std::to_string(r.seed) + "\n";
    return out;
}

// ---------------------------------------------------------------- universal design

/// Best-order design of `h` on `grid` by the named method; "fir" fits a polynomial of order K.
inline DesignReport design_by_name(const FrequencyGrid& grid, const CVec& h, Eigen::Index K, const std::string& method,
                                   const OrderSearchOptions& opt = {}) {
    DesignProblem pb;
    pb.grid = grid;
    pb.h = h;
    if (method == "fir") return fir_as_report(pb, K);
    return best_order_search(pb, K, parse_design_method(method), opt);
}

/// RNMSE versus K for each method on an ideal low-pass over a universal grid.
inline ExperimentReport universal_study(GridKind kind, Eigen::Index N, Eigen::Index K_min, Eigen::Index K_max,
                                        const std::vector<std::string>& methods, double cutoff = 1.0) {
    require(kind != GridKind::graph_spectrum, ErrorKind::parameter, "universal study needs a universal grid kind");
    require(K_min >= 0 && K_max >= K_min, ErrorKind::parameter, "invalid K range");
    const FrequencyGrid grid = kind == GridKind::uniform_real ? uniform_real_grid(N) : complex_disc_grid(N);
    const CVec h = ideal_lowpass(grid, cutoff);
    ExperimentReport rep;
    rep.config = {{"grid", to_string(kind)}, {"N", N}, {"K_min", K_min}, {"K_max", K_max}, {"cutoff", cutoff}};
    for (const auto& m : methods)
        for (Eigen::Index K = K_min; K <= K_max; ++K) {
            const auto d = design_by_name(grid, h, K, m);
            rep.rows.push_back(make_row("universal", m, K, {d.rnmse_true}, {{d.filter.P(), d.filter.Q()}}, 0));
        }
    return rep;
}

/// Connected ER graph Laplacian; re-draws (seed + 1000·attempt) if a node is isolated.
inline ShiftOperator er_laplacian(std::size_t n, double p, std::uint64_t seed) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        try {
            return normalize(build_er_graph(n, p, seed + 1000ULL * static_cast<std::uint64_t>(attempt)),
                             ShiftKind::normalized_laplacian);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::zero_degree) throw;
        }
    }
    throw Error(ErrorKind::zero_degree, "could not draw an ER graph without isolated nodes");
}

/// Design on the spectra of ER graph realizations, averaged.
inline ExperimentReport er_study(std::size_t n, double p, int realizations, Eigen::Index K_min, Eigen::Index K_max,
                                 const std::vector<std::string>& methods, std::uint64_t seed, double cutoff = 1.0) {
    require(realizations >= 1, ErrorKind::parameter, "need at least one realization");
    std::vector<FrequencyGrid> grids;
    for (int r = 0; r < realizations; ++r)
        grids.push_back(graph_spectrum_grid(eigendecompose(er_laplacian(n, p, seed + static_cast<std::uint64_t>(r)))));
    ExperimentReport rep;
    rep.config = {{"n", n}, {"p", p}, {"realizations", realizations}, {"K_min", K_min}, {"K_max", K_max}, {"seed", seed}};
    for (const auto& m : methods)
        for (Eigen::Index K = K_min; K <= K_max; ++K) {
            std::vector<double> errs;
            std::vector<std::pair<Eigen::Index, Eigen::Index>> orders;
            for (const auto& g : grids) {
                const auto d = design_by_name(g, ideal_lowpass(g, cutoff), K, m);
                errs.push_back(d.rnmse_true);
                orders.emplace_back(d.filter.P(), d.filter.Q());
            }
            rep.rows.push_back(make_row("er-spectrum", m, K, errs, orders, seed));
        }
    return rep;
}

/// Response actually realized on a graph: ratio of output to input spectra.
inline CVec realized_response(const SpectralDecomposition& dec, const Vec& x, const Vec& y) {
    const CVec xh = gft(dec, x);
    const CVec yh = gft(dec, y);
    return yh.cwiseQuotient(xh);
}

struct BudgetedResult {
    double arma_rnmse = 0.0;
    Eigen::Index P = 0;
    Eigen::Index Q = 0;
    int T = 0;
    double fir_rnmse = 0.0;
};

/// Universal low-pass designs applied on a graph with CG limited to P·T + Q <= K shifts
/// (T = ⌊(K-Q)/P⌋ iterations), against an order-K FIR. Error is measured on the realized response.
inline BudgetedResult budgeted_cg_comparison(const ShiftOperator& op, const SpectralDecomposition& dec, const Vec& x,
                                             const std::map<std::pair<Eigen::Index, Eigen::Index>, ArmaFilter>& designs,
                                             const FirFilter& fir, Eigen::Index K, double cutoff = 1.0,
                                             double eps = 1e-3) {
    const CVec target = ideal_lowpass(graph_spectrum_grid(dec), cutoff);
    BudgetedResult out;
    out.fir_rnmse = rnmse(target, realized_response(dec, x, fir_apply(fir, op, x)));
    out.arma_rnmse = std::numeric_limits<double>::infinity();
    for (const auto& [pq, f] : designs) {
        const auto [P, Q] = pq;
        if (P < 1 || Q >= K) continue;
        const int T = static_cast<int>((K - Q) / P);
        if (T < 1) continue;
        CgConfig cfg;
        cfg.epsilon = eps;
        cfg.max_iter = T;
        const Vec y = arma_apply_cg(f, op, x, cfg);
        const double e = rnmse(target, realized_response(dec, x, y));
        if (e < out.arma_rnmse) {
            out.arma_rnmse = e;
            out.P = P;
            out.Q = Q;
            out.T = T;
        }
    }
    return out;
}

/// Iterative universal designs for every P >= 1, Q >= 0 with P + Q <= K on `grid`.
inline std::map<std::pair<Eigen::Index, Eigen::Index>, ArmaFilter> universal_design_table(const FrequencyGrid& grid,
                                                                                          const CVec& h, Eigen::Index K) {
    std::map<std::pair<Eigen::Index, Eigen::Index>, ArmaFilter> table;
    for (Eigen::Index P = 1; P <= K; ++P)
        for (Eigen::Index Q = 0; P + Q <= K; ++Q) {
            DesignProblem pb;
            pb.grid = grid;
            pb.h = h;
            pb.P = P;
            pb.Q = Q;
            try {
                table.emplace(std::make_pair(P, Q), iterative_design(pb).filter);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::design_failure && e.kind() != ErrorKind::numerical) throw;
            }
        }
    return table;
}

// ---------------------------------------------------------------- interpolation

struct InterpolationTask {
    /// 1 where the value is observed.
    std::vector<bool> mask;
    double omega = 1.0;
    double noise_variance = 0.0;
    std::uint64_t seed = 0;

    void validate(std::size_t n) const {
        require(mask.size() == n, ErrorKind::dimension, "mask length must equal the node count");
        require(std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }), ErrorKind::parameter,
                "at least one value must be known");
        require(omega > 0.0 && std::isfinite(omega), ErrorKind::parameter, "omega must be positive");
        require(noise_variance >= 0.0, ErrorKind::parameter, "noise variance must be non-negative");
    }
};

inline void check_observed_components(const ShiftOperator& op, const std::vector<bool>& mask) {
    const auto label = connected_components(op);
    std::map<std::size_t, bool> seen;
    for (std::size_t v = 0; v < label.size(); ++v) seen[label[v]] = seen[label[v]] || mask[v];
    for (const auto& [c, ok] : seen)
        if (!ok)
            throw Error(ErrorKind::singular, "a connected component containing node " + std::to_string(c) +
                                                 " has no observed value");
}

/// Solves (T + ωL) x̃ = x' with CG; the system operator is applied matrix-free.
inline Vec interpolate(const ShiftOperator& op, const Vec& x_observed, const InterpolationTask& task,
                       const CgConfig& cfg, CgTrace* trace = nullptr) {
    task.validate(static_cast<std::size_t>(op.size()));
    require_size(x_observed.size(), op.size(), "observed signal");
    require(op.is_symmetric(), ErrorKind::parameter, "interpolation needs a symmetric operator");
    cfg.validate();
    check_observed_components(op, task.mask);
    Vec m(op.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = task.mask[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    const Vec rhs = m.cwiseProduct(x_observed);
    auto A = [&](const Vec& v) -> Vec { return m.cwiseProduct(v) + task.omega * shift_apply(op, v); };
    auto residual = [&](const Vec& v) -> Vec { return rhs - A(v); };
    Vec y = cfg.y0.size() ? cfg.y0 : Vec::Zero(op.size());
    CgTrace t;
    const auto status = conjugate_gradient(A, residual, y, cfg.epsilon, cfg.max_iter, 1, 1, t);
    if (status == CgStatus::indefinite) throw Error(ErrorKind::singular, "interpolation system is not positive definite");
    t.converged = status == CgStatus::converged;
    if (trace) *trace = t;
    return y;
}

/// Dense solve of the same system.
inline Vec interpolate_exact(const ShiftOperator& op, const Vec& x_observed, const InterpolationTask& task) {
    task.validate(static_cast<std::size_t>(op.size()));
    check_observed_components(op, task.mask);
    Mat A = task.omega * op.dense();
    Vec rhs = Vec::Zero(op.size());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        if (task.mask[static_cast<std::size_t>(i)]) {
            A(i, i) += 1.0;
            rhs(i) = x_observed(i);
        }
    Eigen::PartialPivLU<Mat> lu(A);
    require(lu.rcond() > 1e-14, ErrorKind::singular, "interpolation system is singular");
    return lu.solve(rhs);
}

inline std::vector<bool> random_mask(std::size_t n, double fraction, Rng& rng) {
    const auto known = static_cast<std::size_t>(
        std::clamp<double>(std::round(fraction * static_cast<double>(n)), 1.0, static_cast<double>(n)));
    std::vector<bool> mask(n, false);
    const auto perm = rng.permutation(n);
    for (std::size_t i = 0; i < known; ++i) mask[perm[i]] = true;
    return mask;
}

struct InterpolationSweep {
    std::vector<double> fractions;
    std::vector<double> omegas{1.0, 2.0};
    int trials = 50;
    double noise_variance = 1e-2;
    CgConfig cg{1e-2, 20, {}};
    std::uint64_t seed = 0;
};

/// Reports rows "arma-cg" and "exact" per (ω, known percentage); K holds the percentage.
inline ExperimentReport interpolation_study(const ShiftOperator& L, const InterpolationSweep& sw) {
    const auto dec = eigendecompose(L);
    ExperimentReport rep;
    rep.config = {{"omegas", sw.omegas}, {"fractions", sw.fractions}, {"trials", sw.trials},
                  {"noise_variance", sw.noise_variance}, {"cg_epsilon", sw.cg.epsilon},
                  {"cg_max_iter", sw.cg.max_iter}, {"seed", sw.seed}};
    for (double omega : sw.omegas)
        for (double frac : sw.fractions) {
            Rng rng(sw.seed);
            std::vector<double> cg_err, ex_err;
            for (int t = 0; t < sw.trials; ++t) {
                const Vec x = smooth_signal(dec, ShiftKind::normalized_laplacian, rng);
                const Vec noisy = x + std::sqrt(sw.noise_variance) * rng.normal_vector(x.size());
                InterpolationTask task;
                task.mask = random_mask(static_cast<std::size_t>(x.size()), frac, rng);
                task.omega = omega;
                task.noise_variance = sw.noise_variance;
                Vec obs = noisy;
                for (Eigen::Index i = 0; i < obs.size(); ++i)
                    if (!task.mask[static_cast<std::size_t>(i)]) obs(i) = 0.0;
                cg_err.push_back(rnmse(x, interpolate(L, obs, task, sw.cg)));
                ex_err.push_back(rnmse(x, interpolate_exact(L, obs, task)));
            }
            const auto pct = static_cast<Eigen::Index>(std::lround(100.0 * frac));
            const std::string tag = "interpolation-omega" + io::fmt(omega);
            rep.rows.push_back(make_row(tag, "arma-cg", pct, cg_err, {{1, 0}}, sw.seed));
            rep.rows.push_back(make_row(tag, "exact", pct, ex_err, {{1, 0}}, sw.seed));
        }
    return rep;
}

// ---------------------------------------------------------------- compression

struct CompressionResult {
    ArmaFilter filter;
    Vec reconstruction;
    double rnmse = 0.0;
};

/// Fits the signal's spectrum as a filter response on the true frequencies and rebuilds the
/// signal from the fitted response. Orders range over P + Q <= K.
inline CompressionResult compress(const SpectralDecomposition& dec, const Vec& x, Eigen::Index K,
                                  const std::string& method = "iterative", const OrderSearchOptions& opt_in = {}) {
    require_size(x.size(), dec.size(), "signal");
    const CVec xh = gft(dec, x);
    const FrequencyGrid grid = graph_spectrum_grid(dec);
    DesignProblem pb;
    pb.grid = grid;
    pb.h = xh;
    CompressionResult out;
    if (method == "fir") {
        const auto d = fir_design(grid, xh, K);
        out.filter = ArmaFilter(Vec::Ones(1), d.filter.g);
    } else {
        OrderSearchOptions opt = opt_in;
        opt.up_to_budget = true;
        out.filter = best_order_search(pb, K, parse_design_method(method), opt).filter;
    }
    out.reconstruction = igft(dec, arma_response(out.filter, grid)).real();
    out.rnmse = rnmse(x, out.reconstruction);
    return out;
}

inline CompressionResult compress(const ShiftOperator& op, const Vec& x, Eigen::Index K,
                                  const std::string& method = "iterative") {
    return compress(eigendecompose(op), x, K, method);
}

/// Mean reconstruction error over smooth synthetic signals on one operator.
inline ExperimentReport compression_study(const ShiftOperator& op, ShiftKind order_kind,
                                          const std::vector<Eigen::Index>& Ks, const std::vector<std::string>& methods,
                                          int trials, std::uint64_t seed) {
    const auto dec = eigendecompose(op);
    std::vector<Vec> signals;
    Rng rng(seed);
    for (int t = 0; t < trials; ++t) signals.push_back(smooth_signal(dec, order_kind, rng));
    ExperimentReport rep;
    rep.config = {{"Ks", Ks}, {"methods", methods}, {"trials", trials}, {"seed", seed}};
    for (const auto& m : methods)
        for (auto K : Ks) {
            std::vector<double> errs;
            std::vector<std::pair<Eigen::Index, Eigen::Index>> orders;
            for (const auto& x : signals) {
                const auto c = compress(dec, x, K, m);
                errs.push_back(c.rnmse);
                orders.emplace_back(c.filter.P(), c.filter.Q());
            }
            rep.rows.push_back(make_row("compression", m, K, errs, orders, seed));
        }
    return rep;
}

// ---------------------------------------------------------------- prediction

struct QuantizedResidual {
    int B = 0;
    int b_int = 0;
    double step = 0.0;
    Vec values;
};

/// Sign bit, b_int = max(0, ⌈log₂ max|r|⌉) integer bits, the rest fractional. Values round
/// half to even and clamp to ±(2^b_int - step).
inline QuantizedResidual quantize(const Vec& r, int B) {
    require(B >= 3, ErrorKind::parameter, "quantizer needs at least 3 bits");
    require(r.allFinite(), ErrorKind::parameter, "residual must be finite");
    QuantizedResidual q;
    q.B = B;
    const double m = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    q.b_int = m > 0.0 ? std::max(0, static_cast<int>(std::ceil(std::log2(m)))) : 0;
    q.step = std::ldexp(1.0, -(B - q.b_int - 1));
    const double lim = std::ldexp(1.0, q.b_int) - q.step;
    q.values.resize(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i)
        q.values(i) = std::clamp(std::nearbyint(r(i) / q.step) * q.step, -lim, lim);
    return q;
}

inline Vec dequantize(const QuantizedResidual& q) { return q.values; }

/// Predictor design: unit target, |x̂| row weights, b₀ = 0, best over P + Q = K.
inline DesignReport design_predictor(const SpectralDecomposition& dec, const Vec& x, Eigen::Index K,
                                     DesignMethod method = DesignMethod::iterative) {
    DesignProblem pb;
    pb.grid = graph_spectrum_grid(dec);
    pb.h = CVec::Ones(dec.size());
    pb.weights = gft(dec, x).cwiseAbs();
    pb.constrain_b0_zero = true;
    return best_order_search(pb, K, method);
}

/// Backward filter (I - g(S))⁻¹ = (Σa - Σb)⁻¹ Σa, as an ARMA filter.
inline ArmaFilter backward_filter(const ArmaFilter& g) {
    require(g.b()(0) == 0.0, ErrorKind::parameter, "backward filter needs b0 = 0");
    const Eigen::Index L = std::max(g.a().size(), g.b().size());
    Vec den = Vec::Zero(L);
    den.head(g.a().size()) = g.a();
    den.head(g.b().size()) -= g.b();
    return ArmaFilter(den, g.a());
}

struct PredictionResult {
    ArmaFilter filter;
    Vec residual;
    QuantizedResidual quantized;
    Vec reconstruction;
    double rnmse = 0.0;
};

/// r = x - g(S)x, quantize, then x̃ = (I - g(S))⁻¹ r_q.
inline PredictionResult predict_with(const ArmaFilter& g, const ShiftOperator& op, const Vec& x, int B) {
    PredictionResult out;
    out.filter = g;
    out.residual = x - arma_apply_direct(g, op, x);
    out.quantized = quantize(out.residual, B);
    out.reconstruction = arma_apply_direct(backward_filter(g), op, dequantize(out.quantized));
    out.rnmse = rnmse(x, out.reconstruction);
    return out;
}

inline PredictionResult predict(const ShiftOperator& op, const Vec& x, Eigen::Index P, Eigen::Index Q, int B,
                                DesignMethod method = DesignMethod::iterative) {
    const auto dec = eigendecompose(op);
    DesignProblem pb;
    pb.grid = graph_spectrum_grid(dec);
    pb.h = CVec::Ones(dec.size());
    pb.weights = gft(dec, x).cwiseAbs();
    pb.constrain_b0_zero = true;
    pb.P = P;
    pb.Q = Q;
    require(Q >= 1, ErrorKind::parameter, "prediction needs Q >= 1 since b0 = 0");
    return predict_with(run_design(pb, method).filter, op, x, B);
}

/// Mean reconstruction error over (K, B) for smooth synthetic signals.
inline ExperimentReport prediction_study(const ShiftOperator& op, ShiftKind order_kind, const std::vector<Eigen::Index>& Ks,
                                         const std::vector<int>& Bs, int trials, std::uint64_t seed,
                                         const std::string& tag = "prediction") {
    const auto dec = eigendecompose(op);
    Rng rng(seed);
    std::vector<Vec> signals;
    for (int t = 0; t < trials; ++t) signals.push_back(smooth_signal(dec, order_kind, rng));
    ExperimentReport rep;
    rep.config = {{"Ks", Ks}, {"Bs", Bs}, {"trials", trials}, {"seed", seed}};
    for (auto K : Ks) {
        std::vector<ArmaFilter> filters;
        std::vector<std::pair<Eigen::Index, Eigen::Index>> orders;
        for (const auto& x : signals) {
            filters.push_back(design_predictor(dec, x, K).filter);
            orders.emplace_back(filters.back().P(), filters.back().Q());
        }
        for (int B : Bs) {
            std::vector<double> errs;
            for (std::size_t t = 0; t < signals.size(); ++t)
                errs.push_back(predict_with(filters[t], op, signals[t], B).rnmse);
            rep.rows.push_back(make_row(tag, "B" + std::to_string(B), K, errs, orders, seed));
        }
    }
    return rep;
}

}  // namespace graphfilt
