#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "graphfilt/graphfilt.hpp"

namespace gf = graphfilt;
using nlohmann::json;

namespace {

constexpr int exit_usage = 64;

int exit_code(gf::ErrorKind k) {
    switch (k) {
        case gf::ErrorKind::parameter: return 2;
        case gf::ErrorKind::dimension: return 3;
        case gf::ErrorKind::parse: return 4;
        case gf::ErrorKind::io: return 5;
        case gf::ErrorKind::zero_norm: return 6;
        case gf::ErrorKind::zero_degree: return 7;
        case gf::ErrorKind::degenerate_distance: return 8;
        case gf::ErrorKind::non_diagonalizable: return 9;
        case gf::ErrorKind::conjugate_symmetry: return 10;
        case gf::ErrorKind::numerical: return 11;
        case gf::ErrorKind::instability: return 12;
        case gf::ErrorKind::singular: return 13;
        case gf::ErrorKind::divergence: return 14;
        case gf::ErrorKind::design_failure: return 15;
    }
    return 1;
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(gf::io::read_file(path));
    } catch (const json::exception& e) {
        throw gf::Error(gf::ErrorKind::parse, path + ": " + e.what());
    }
}

struct GraphSource {
    std::string path;
    std::string shift = "adjacency";

    void add(CLI::App* app) {
        app->add_option("--graph", path, "Graph JSON file")->required();
        app->add_option("--shift", shift, "Shift operator")
            ->check(CLI::IsMember({"adjacency", "laplacian", "normalized-adjacency", "normalized-laplacian"}));
    }

    gf::ShiftOperator load() const {
        return gf::normalize(gf::load_graph_json(path), gf::parse_shift_kind(shift));
    }
};

// ---------------------------------------------------------------- gen-graph

struct GenGraphArgs {
    bool er = false;
    std::size_t knn = 0;
    std::size_t n = 0;
    double p = 0.1;
    std::uint64_t seed = 0;
    std::string coords;
    std::string edges;
    bool directed = false;
    bool one_based = false;
    std::string out;
    std::string coords_out;
};

void run_gen_graph(const GenGraphArgs& a, const std::string& config) {
    gf::Graph g;
    const int sources = int(a.er) + int(a.knn > 0) + int(!a.edges.empty());
    gf::require(sources == 1, gf::ErrorKind::parameter, "choose exactly one of --er, --knn, --edges");
    if (a.er) {
        g = gf::build_er_graph(a.n, a.p, a.seed);
    } else if (a.knn) {
        std::vector<gf::Point2> pts;
        if (!a.coords.empty()) {
            pts = gf::parse_coords_csv(gf::io::read_file(a.coords), a.coords);
        } else {
            gf::require(a.n >= 2, gf::ErrorKind::parameter, "--knn needs --coords or --n for random positions");
            gf::Rng rng(a.seed);
            pts = gf::random_coords(a.n, rng);
        }
        g = gf::build_knn_directed(pts, a.knn);
        if (!a.coords_out.empty()) gf::io::write_file_atomic(a.coords_out, gf::coords_to_csv(pts));
    } else {
        g = gf::parse_edge_csv(gf::io::read_file(a.edges), a.directed, a.one_based, a.n, a.edges);
    }
    json j = gf::graph_to_json(g);
    j["config"] = config;
    gf::io::write_file_atomic(a.out, j.dump(1) + "\n");
    std::cout << "wrote " << a.out << " (n=" << g.size() << ", edges=" << g.edges().size() << ")\n";
}

// ---------------------------------------------------------------- design

struct DesignArgs {
    std::string method = "iterative";
    std::string grid = "uniform-real";
    long n = 100;
    GraphSource graph;
    std::string response = "lowpass:1.0";
    std::optional<long> k;
    std::optional<long> P;
    std::optional<long> Q;
    std::optional<long> budget;
    bool up_to_budget = false;
    int tau = 50;
    double delta_c = 1e-10;
    double rho = -1.0;
    bool b0_zero = false;
    std::string amplitude = "auto";
    double stability_threshold = 1e-8;
    std::string out;
    std::string report;
    std::string grid_out;
};

gf::FrequencyGrid make_grid(const DesignArgs& a) {
    const auto kind = gf::parse_grid_kind(a.grid);
    if (kind == gf::GridKind::uniform_real) return gf::uniform_real_grid(a.n);
    if (kind == gf::GridKind::complex_disc) return gf::complex_disc_grid(a.n);
    gf::require(!a.graph.path.empty(), gf::ErrorKind::parameter, "graph-spectrum grid needs --graph");
    return gf::graph_spectrum_grid(gf::eigendecompose(a.graph.load()));
}

/// `lowpass:<cutoff>`, `allpass`, or `file:<path>` with `re,im` rows in grid order.
gf::CVec parse_response(const std::string& desc, const gf::FrequencyGrid& grid) {
    if (desc == "allpass") return gf::ideal_allpass(grid);
    if (desc.rfind("lowpass:", 0) == 0) {
        const double c = gf::io::parse_double(desc.substr(8), "--response");
        return gf::ideal_lowpass(grid, c);
    }
    if (desc.rfind("file:", 0) == 0) {
        const std::string path = desc.substr(5);
        const auto csv = gf::io::parse_csv(gf::io::read_file(path), {"re", "im"}, path);
        gf::CVec h(static_cast<Eigen::Index>(csv.rows.size()));
        for (std::size_t i = 0; i < csv.rows.size(); ++i) {
            const auto ctx = gf::io::where(path, csv.lines[i]);
            h(static_cast<Eigen::Index>(i)) =
                gf::cplx(gf::io::parse_double(csv.rows[i][0], ctx), gf::io::parse_double(csv.rows[i][1], ctx));
        }
        gf::require_size(h.size(), grid.size(), "response file");
        return h;
    }
    throw gf::Error(gf::ErrorKind::parameter, "unknown response '" + desc + "' (lowpass:<c>, allpass, file:<path>)");
}

void run_design(const DesignArgs& a, const std::string& config) {
    const auto grid = make_grid(a);
    const gf::CVec h = parse_response(a.response, grid);
    if (!a.grid_out.empty()) gf::io::write_file_atomic(a.grid_out, gf::grid_to_csv(grid));

    gf::DesignProblem pb;
    pb.grid = grid;
    pb.h = h;
    pb.constrain_b0_zero = a.b0_zero;
    pb.rho = a.rho;
    pb.stability_threshold = a.stability_threshold;
    if (a.amplitude == "on") pb.amplitude_only = true;
    if (a.amplitude == "off") pb.amplitude_only = false;

    json filter_json;
    json report;
    if (a.method == "fir") {
        gf::require(a.k.has_value(), gf::ErrorKind::parameter, "FIR design needs --k");
        const auto d = gf::fir_design(grid, h, *a.k);
        filter_json = gf::fir_to_json(d.filter);
        report = filter_json;
        report["method"] = "fir";
        report["K"] = *a.k;
        report["rnmse_true"] = d.residual_rnmse;
        report["imag_residue"] = d.imag_residue;
        report["rank_deficient"] = d.rank_deficient;
        std::cout << "fir K=" << *a.k << " rnmse=" << d.residual_rnmse << "\n";
    } else {
        const auto method = gf::parse_design_method(a.method);
        gf::IterativeOptions it;
        it.tau = a.tau;
        it.delta_c = a.delta_c;
        gf::DesignReport rep;
        if (a.budget) {
            gf::require(!a.P && !a.Q, gf::ErrorKind::parameter, "use either --budget or --P/--Q");
            gf::OrderSearchOptions opt;
            opt.up_to_budget = a.up_to_budget;
            opt.iterative = it;
            rep = gf::best_order_search(pb, *a.budget, method, opt);
        } else {
            gf::require(a.P && a.Q, gf::ErrorKind::parameter, "ARMA design needs --P and --Q, or --budget");
            pb.P = *a.P;
            pb.Q = *a.Q;
            rep = gf::run_design(pb, method, it);
        }
        filter_json = gf::arma_to_json(rep.filter);
        report = gf::report_to_json(rep);
        std::cout << rep.method << " P=" << rep.filter.P() << " Q=" << rep.filter.Q() << " rnmse=" << rep.rnmse_true
                  << (rep.stability.stable ? "" : " (unstable on grid)") << "\n";
    }
    report["grid"] = gf::to_string(grid.kind);
    report["config"] = config;
    gf::io::write_file_atomic(a.out, filter_json.dump(1) + "\n");
    if (!a.report.empty()) gf::io::write_file_atomic(a.report, report.dump(1) + "\n");
}

// ---------------------------------------------------------------- apply

struct ApplyArgs {
    GraphSource graph;
    std::string filter;
    std::string signal;
    std::string solver = "cg";
    double cg_eps = 1e-3;
    int cg_max_iter = 100;
    std::string trace;
    std::string out;
};

void run_apply(const ApplyArgs& a) {
    const auto op = a.graph.load();
    const json fj = parse_json_file(a.filter);
    const gf::Vec x = gf::parse_signal_vector_csv(gf::io::read_file(a.signal), a.signal);
    gf::require_size(x.size(), op.size(), "signal");
    gf::Vec y;
    const std::string type = fj.value("type", "");
    if (type == "fir") {
        y = gf::fir_apply(gf::fir_from_json(fj), op, x);
    } else if (type == "arma") {
        const auto f = gf::arma_from_json(fj);
        if (a.solver == "direct") {
            y = gf::arma_apply_direct(f, op, x);
        } else {
            gf::CgConfig cfg;
            cfg.epsilon = a.cg_eps;
            cfg.max_iter = a.cg_max_iter;
            gf::CgTrace tr;
            try {
                y = gf::arma_apply_cg(f, op, x, cfg, &tr);
            } catch (const gf::DivergenceError& e) {
                if (!a.trace.empty()) gf::io::write_file_atomic(a.trace, gf::trace_to_csv(e.trace()));
                throw;
            }
            if (!a.trace.empty()) gf::io::write_file_atomic(a.trace, gf::trace_to_csv(tr));
            std::cerr << "cg iterations=" << tr.iterations << " shifts=" << tr.shift_applications
                      << (tr.normal_equations ? " (normal equations)" : "") << (tr.converged ? "" : " (not converged)")
                      << "\n";
        }
    } else {
        throw gf::Error(gf::ErrorKind::parse, a.filter + ": unknown filter type '" + type + "'");
    }
    gf::io::write_file_atomic(a.out, gf::signal_vector_to_csv(y));
}

// ---------------------------------------------------------------- experiment

struct ExperimentArgs {
    std::string kind;
    std::uint64_t seed = 1;
    int trials = 20;
    long n = 100;
    std::string grid = "uniform-real";
    long k_min = 2;
    long k_max = 30;
    std::vector<std::string> methods{"fir", "prony-ls", "prony-projection", "iterative"};
    double p = 0.1;
    std::vector<long> ks;
    std::vector<int> bits{3, 5, 7, 16};
    std::vector<double> fractions{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<double> omegas{1.0, 2.0};
    double noise_variance = 1e-2;
    double cg_eps = 1e-2;
    int cg_max_iter = 20;
    bool undirected = false;
    std::string out;
};

void run_experiment(const ExperimentArgs& a, const std::string& config) {
    gf::ExperimentReport rep;
    auto K_list = [&](std::vector<long> dflt) {
        std::vector<Eigen::Index> out;
        for (long k : a.ks.empty() ? dflt : a.ks) out.push_back(k);
        return out;
    };
    if (a.kind == "universal") {
        rep = gf::universal_study(gf::parse_grid_kind(a.grid), a.n, a.k_min, a.k_max, a.methods);
    } else if (a.kind == "er") {
        rep = gf::er_study(static_cast<std::size_t>(a.n), a.p, a.trials, a.k_min, a.k_max, a.methods, a.seed);
    } else if (a.kind == "interpolation") {
        const auto gg = gf::geometric_graphs(32, 6, a.seed);
        gf::InterpolationSweep sw;
        sw.fractions = a.fractions;
        sw.omegas = a.omegas;
        sw.trials = a.trials;
        sw.noise_variance = a.noise_variance;
        sw.cg.epsilon = a.cg_eps;
        sw.cg.max_iter = a.cg_max_iter;
        sw.seed = a.seed;
        rep = gf::interpolation_study(gf::normalize(gg.undirected, gf::ShiftKind::normalized_laplacian), sw);
    } else if (a.kind == "compression") {
        const auto gg = gf::geometric_graphs(32, 6, a.seed);
        const auto op = gf::normalize(a.undirected ? gg.undirected : gg.directed, gf::ShiftKind::normalized_adjacency);
        std::vector<std::string> methods;
        for (const auto& m : a.methods)
            if (m == "fir" || m == "iterative" || m == "prony-ls" || m == "prony-projection") methods.push_back(m);
        rep = gf::compression_study(op, gf::ShiftKind::normalized_adjacency, K_list({4, 8, 16, 23}), methods, a.trials,
                                    a.seed);
    } else if (a.kind == "prediction") {
        const auto gg = gf::geometric_graphs(32, 6, a.seed);
        const auto op = gf::normalize(a.undirected ? gg.undirected : gg.directed, gf::ShiftKind::normalized_adjacency);
        rep = gf::prediction_study(op, gf::ShiftKind::normalized_adjacency, K_list({3, 4, 6}), a.bits, a.trials, a.seed,
                                   a.undirected ? "prediction-undirected" : "prediction");
    } else {
        throw gf::Error(gf::ErrorKind::parameter, "unknown experiment '" + a.kind + "'");
    }
    gf::io::write_file_atomic(a.out, gf::report_to_csv(rep));
    gf::io::write_file_atomic(a.out + ".config.ini", config);
    std::cout << gf::report_to_csv(rep);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph filter design and application (ARMA and FIR)"};
    app.set_config("--config", "", "Read options from an INI/TOML file; unknown keys are rejected");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    GenGraphArgs gg;
    auto* gen = app.add_subcommand("gen-graph", "Generate or ingest a graph and write graph JSON");
    gen->add_flag("--er", gg.er, "Erdos-Renyi graph (needs --n, --p)");
    gen->add_option("--knn", gg.knn, "Directed k-nearest-neighbor graph with this k");
    gen->add_option("--n", gg.n, "Node count (ER, random kNN positions, or edge-list size)");
    gen->add_option("--p", gg.p, "ER link probability");
    gen->add_option("--seed", gg.seed, "Random seed");
    gen->add_option("--coords", gg.coords, "Coordinates CSV (id,x,y) for --knn");
    gen->add_option("--coords-out", gg.coords_out, "Write the kNN positions as CSV");
    gen->add_option("--edges", gg.edges, "Edge-list CSV (src,dst,weight)");
    gen->add_flag("--directed", gg.directed, "Edge list is directed");
    gen->add_flag("--one-based", gg.one_based, "Edge list node indices start at 1");
    gen->add_option("-o,--out", gg.out, "Output graph JSON")->required();

    DesignArgs da;
    auto* des = app.add_subcommand("design", "Design an FIR or ARMA filter");
    des->add_option("--method", da.method, "fir, prony-ls, prony-projection or iterative")
        ->check(CLI::IsMember({"fir", "prony-ls", "prony-projection", "iterative", "ls", "projection"}));
    des->add_option("--grid", da.grid, "uniform-real, complex-disc or graph-spectrum")
        ->check(CLI::IsMember({"uniform-real", "complex-disc", "graph-spectrum"}));
    des->add_option("--n", da.n, "Grid size for universal grids");
    des->add_option("--graph", da.graph.path, "Graph JSON for the graph-spectrum grid");
    des->add_option("--shift", da.graph.shift, "Shift operator for the graph-spectrum grid")
        ->check(CLI::IsMember({"adjacency", "laplacian", "normalized-adjacency", "normalized-laplacian"}));
    des->add_option("--response", da.response, "lowpass:<cutoff>, allpass or file:<path> (re,im rows)");
    des->add_option("--k", da.k, "FIR order");
    des->add_option("--P", da.P, "ARMA denominator order");
    des->add_option("--Q", da.Q, "ARMA numerator order");
    des->add_option("--budget", da.budget, "Search orders with P+Q = budget");
    des->add_flag("--up-to-budget", da.up_to_budget, "Search P+Q <= budget instead");
    des->add_option("--tau", da.tau, "Iteration cap of the iterative method");
    des->add_option("--delta-c", da.delta_c, "Stopping threshold on successive error vectors");
    des->add_option("--rho", da.rho, "Denominator regularizer (negative: 1e-8 max|alpha|)");
    des->add_flag("--b0-zero", da.b0_zero, "Pin b0 to zero");
    des->add_option("--amplitude", da.amplitude, "Amplitude-only error: auto, on or off")
        ->check(CLI::IsMember({"auto", "on", "off"}));
    des->add_option("--stability-threshold", da.stability_threshold, "Minimum denominator magnitude");
    des->add_option("-o,--out", da.out, "Output filter JSON")->required();
    des->add_option("--report", da.report, "Design report JSON");
    des->add_option("--grid-out", da.grid_out, "Write the design grid as CSV");

    ApplyArgs aa;
    auto* app_cmd = app.add_subcommand("apply", "Apply a filter to a graph signal");
    aa.graph.add(app_cmd);
    app_cmd->add_option("--filter", aa.filter, "Filter JSON")->required();
    app_cmd->add_option("--signal", aa.signal, "Signal CSV (node_id,value)")->required();
    app_cmd->add_option("--solver", aa.solver, "ARMA solver")->check(CLI::IsMember({"direct", "cg"}));
    app_cmd->add_option("--cg-eps", aa.cg_eps, "CG relative residual tolerance");
    app_cmd->add_option("--cg-max-iter", aa.cg_max_iter, "CG iteration cap");
    app_cmd->add_option("--trace", aa.trace, "CG residual trace CSV");
    app_cmd->add_option("-o,--out", aa.out, "Output signal CSV")->required();

    ExperimentArgs ea;
    auto* exp = app.add_subcommand("experiment", "Run an experiment sweep and write a report CSV");
    exp->add_option("kind", ea.kind, "universal, er, interpolation, compression or prediction")
        ->required()
        ->check(CLI::IsMember({"universal", "er", "interpolation", "compression", "prediction"}));
    exp->add_option("--seed", ea.seed, "Random seed");
    exp->add_option("--trials", ea.trials, "Trials (signals or graph realizations)");
    exp->add_option("--n", ea.n, "Grid size (universal) or node count (er)");
    exp->add_option("--grid", ea.grid, "Universal grid kind")->check(CLI::IsMember({"uniform-real", "complex-disc"}));
    exp->add_option("--k-min", ea.k_min, "Smallest order budget");
    exp->add_option("--k-max", ea.k_max, "Largest order budget");
    exp->add_option("--methods", ea.methods, "Methods to compare");
    exp->add_option("--p", ea.p, "ER link probability");
    exp->add_option("--ks", ea.ks, "Order budgets (compression, prediction)");
    exp->add_option("--bits", ea.bits, "Quantizer bit budgets (prediction)");
    exp->add_option("--fractions", ea.fractions, "Known fractions (interpolation)");
    exp->add_option("--omegas", ea.omegas, "Prior weights (interpolation)");
    exp->add_option("--noise-variance", ea.noise_variance, "Observation noise variance (interpolation)");
    exp->add_option("--cg-eps", ea.cg_eps, "CG tolerance (interpolation)");
    exp->add_option("--cg-max-iter", ea.cg_max_iter, "CG iteration cap (interpolation)");
    exp->add_flag("--undirected", ea.undirected, "Use the symmetrized geometric graph");
    exp->add_option("-o,--out", ea.out, "Output report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_usage;
    }

    try {
        if (*gen) run_gen_graph(gg, gen->config_to_str(true, false));
        else if (*des) run_design(da, des->config_to_str(true, false));
        else if (*app_cmd) run_apply(aa);
        else if (*exp) run_experiment(ea, exp->config_to_str(true, false));
    } catch (const gf::Error& e) {
        std::cerr << "graphfilt: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "graphfilt: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
