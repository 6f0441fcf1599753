#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <omp.h>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/gegenbauer.hpp"
#include "gmbm/harness.hpp"
#include "gmbm/io.hpp"
#include "gmbm/metrics.hpp"
#include "gmbm/model.hpp"
#include "gmbm/spectral.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out;
    std::string format = "csv";
};

// Writes to --out when given, else stdout.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty() || path == "-") return;
        file_ = std::make_unique<std::ofstream>(path);
        if (!*file_) throw gmbm::Error("cannot write " + path);
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }
    void finish() {
        stream().flush();
        if (!stream()) throw gmbm::Error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
};

gmbm::OutputFormat output_format(const std::string& s) {
    return s == "jsonl" ? gmbm::OutputFormat::jsonl : gmbm::OutputFormat::csv;
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

// Edge probability for a loaded graph: the header value, else the observed density.
double graph_p(const gmbm::GraphSample& G) { return G.params.p.value_or(G.edge_density()); }

int graph_d(const gmbm::GraphSample& G, std::optional<int> override_d) {
    const int d = override_d.value_or(G.params.d);
    if (d < 2) throw gmbm::InvalidParameter("latent dimension unknown: pass --d");
    return d;
}

double embedding_lambda1(const gmbm::GraphSample& G, int d, std::optional<double> given, bool automatic,
                         std::uint64_t seed) {
    if (given) return *given;
    if (!automatic && G.params.tau) return gmbm::lambda1_closed_form(d - 1, *G.params.tau);
    const double p_hat = G.edge_density();
    const auto cal = gmbm::calibrate_tau(d, G.params.mu, p_hat, gmbm::default_calibration_tolerance(p_hat),
                                         gmbm::RngStream(seed).child("calibrate"));
    return gmbm::lambda1_closed_form(d - 1, cal.tau);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian mixture block model: sampling, spectral embedding, testing and clustering"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--seed", g.seed, "Master RNG seed");
    app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "Output file (default stdout)");
    app.add_option("--format", g.format, "Table format")->check(CLI::IsMember({"csv", "jsonl"}));

    // generate
    auto* gen = app.add_subcommand("generate", "Sample latents and the threshold graph");
    std::size_t gen_n = 0;
    int gen_d = 0;
    double gen_mu = 0.0;
    std::optional<double> gen_p, gen_tau;
    std::size_t gen_samples = gmbm::kDefaultCalibrationSamples;
    std::string gen_latents;
    gen->add_option("--n", gen_n, "Vertices")->required();
    gen->add_option("--d", gen_d, "Latent dimension")->required();
    gen->add_option("--mu", gen_mu, "Half separation of the mixture");
    auto* gen_p_opt = gen->add_option("--p", gen_p, "Target edge probability");
    auto* gen_tau_opt = gen->add_option("--tau", gen_tau, "Connection threshold");
    gen_p_opt->excludes(gen_tau_opt);
    gen->add_option("--samples", gen_samples, "Calibration samples");
    gen->add_option("--latents", gen_latents, "Also write the latent CSV here");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Threshold tau for a target edge probability");
    int cal_d = 0;
    double cal_mu = 0.0, cal_p = 0.0;
    std::optional<double> cal_tol;
    std::size_t cal_samples = gmbm::kDefaultCalibrationSamples;
    cal->add_option("--d", cal_d, "Latent dimension")->required();
    cal->add_option("--mu", cal_mu, "Half separation");
    cal->add_option("--p", cal_p, "Target edge probability")->required();
    cal->add_option("--samples", cal_samples, "Monte Carlo samples");
    cal->add_option("--tol", cal_tol, "Tolerance on p (default max(1e-4, 3 SE))");

    // coeffs
    auto* co = app.add_subcommand("coeffs", "Expansion coefficients of the threshold indicator");
    int co_d = 0, co_kmax = 2;
    double co_tau = 0.0;
    co->add_option("--d", co_d, "Latent dimension d (the expansion uses d - 1)")->required();
    co->add_option("--tau", co_tau, "Threshold")->required();
    co->add_option("--kmax", co_kmax, "Largest degree")->check(CLI::NonNegativeNumber);

    // embed
    auto* emb = app.add_subcommand("embed", "Spectral embedding of a graph");
    std::string emb_graph;
    std::optional<int> emb_d;
    std::optional<double> emb_lambda1;
    bool emb_auto = false;
    emb->add_option("--graph", emb_graph, "Graph edge-list file")->required();
    emb->add_option("--d", emb_d, "Embedding dimension (default: from the graph header)");
    auto* l1 = emb->add_option("--lambda1", emb_lambda1, "Normalization lambda_1");
    emb->add_flag("--auto", emb_auto, "Estimate lambda_1 from the observed edge density")->excludes(l1);

    // cluster
    auto* clu = app.add_subcommand("cluster", "Two-community labels from the second eigenvector");
    std::string clu_graph, clu_cut = "zero";
    std::optional<int> clu_d_est, clu_d_guess;
    bool clu_auto = false;
    clu->add_option("--graph", clu_graph, "Graph edge-list file")->required();
    auto* de = clu->add_option("--d-est", clu_d_est, "Latent dimension estimate");
    clu->add_flag("--auto", clu_auto, "Estimate the dimension from the spectral gap")->excludes(de);
    clu->add_option("--d-guess", clu_d_guess, "Rough dimension for the gap search range (default: header d)");
    clu->add_option("--cut", clu_cut, "Cut point")->check(CLI::IsMember({"zero", "median"}));

    // test
    auto* tst = app.add_subcommand("test", "Test for two communities");
    std::string tst_graph, tst_policy = "null";
    double tst_alpha = 0.05, tst_beta = 9.0;
    int tst_trials = 200;
    tst->add_option("--graph", tst_graph, "Graph edge-list file")->required();
    tst->add_option("--policy", tst_policy, "Threshold policy")->check(CLI::IsMember({"paper", "null"}));
    tst->add_option("--alpha", tst_alpha, "Level of the empirical-null test");
    tst->add_option("--trials", tst_trials, "Null graphs for the empirical threshold");
    tst->add_option("--beta", tst_beta, "Exponent of the log n factor in the formula threshold");

    // metrics
    auto* met = app.add_subcommand("metrics", "Error report for an embedding against true latents");
    std::string met_graph, met_latents, met_embedding;
    met->add_option("--graph", met_graph, "Graph edge-list file")->required();
    met->add_option("--latents", met_latents, "Latent CSV")->required();
    met->add_option("--embedding", met_embedding, "Embedding CSV")->required();

    // sweep
    auto* swp = app.add_subcommand("sweep", "Parameter sweep from a key = value config file");
    std::string swp_config;
    swp->add_option("--config", swp_config, "Sweep config file")->required();

    // test-errors
    auto* te = app.add_subcommand("test-errors", "Type I and type II error of the empirical-null test");
    std::size_t te_n = 0;
    int te_d = 0, te_null = 200, te_alt = 100;
    double te_mu = 0.0, te_p = 0.0, te_alpha = 0.05;
    te->add_option("--n", te_n)->required();
    te->add_option("--d", te_d)->required();
    te->add_option("--mu", te_mu);
    te->add_option("--p", te_p)->required();
    te->add_option("--alpha", te_alpha);
    te->add_option("--null-trials", te_null, "Null graphs for calibration and again for evaluation");
    te->add_option("--alt-trials", te_alt);

    // auc
    auto* au = app.add_subcommand("auc", "ROC area of eta_1 between null and alternative graphs");
    std::size_t au_n = 0;
    int au_d = 0, au_trials = 200;
    double au_mu = 0.0, au_p = 0.0;
    au->add_option("--n", au_n)->required();
    au->add_option("--d", au_d)->required();
    au->add_option("--mu", au_mu)->required();
    au->add_option("--p", au_p)->required();
    au->add_option("--trials", au_trials);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInvalid;
    }

    try {
        if (g.threads > 0) omp_set_num_threads(g.threads);
        const gmbm::RngStream root(g.seed);
        Output out(g.out);

        if (*gen) {
            gmbm::ModelParams P;
            P.n = gen_n;
            P.d = gen_d;
            P.mu = gen_mu;
            P.p = gen_p;
            P.tau = gen_tau;
            P.seed = g.seed;
            P.source = gen_tau ? gmbm::ThresholdSource::threshold : gmbm::ThresholdSource::edge_probability;
            P = gmbm::resolve_threshold(P, root, gen_samples);
            const auto draw = gmbm::draw_graph(P, root.child("graph"));
            gmbm::write_graph(out.stream(), draw.graph);
            if (!gen_latents.empty()) gmbm::save_latents(gen_latents, draw.latents);
        } else if (*cal) {
            const double tol = cal_tol.value_or(gmbm::default_calibration_tolerance(cal_p, cal_samples));
            const auto r = gmbm::calibrate_tau(cal_d, cal_mu, cal_p, tol, root.child("calibrate"), cal_samples);
            ordered_json j;
            j["tau"] = r.tau;
            j["achieved_p"] = r.achieved_p;
            j["se"] = r.se;
            j["samples"] = r.samples;
            j["method"] = std::string(gmbm::to_string(r.method));
            out.stream() << j.dump() << '\n';
        } else if (*co) {
            if (co_d < 4) throw gmbm::InvalidParameter("--d must be at least 4 so that d - 1 >= 3");
            const int dim = co_d - 1;
            const auto cs = gmbm::expansion_coefficients(dim, co_tau, co_kmax);
            const auto fmt = output_format(g.format);
            if (fmt == gmbm::OutputFormat::csv) out.stream() << "k,N_k,lambda_k,c_k,method\n";
            for (int k = 0; k <= co_kmax; ++k) {
                const auto idx = static_cast<std::size_t>(k);
                const auto N = gmbm::harmonic_dimension(dim, k).exact.str();
                const auto method = std::string(gmbm::to_string(cs.method[idx]));
                if (fmt == gmbm::OutputFormat::csv) {
                    out.stream() << k << ',' << N << ',' << gmbm::format_double(cs.lambda[idx]) << ','
                                 << gmbm::format_double(cs.c[idx]) << ',' << method << '\n';
                } else {
                    ordered_json j;
                    j["k"] = k;
                    j["N_k"] = N;
                    j["lambda_k"] = cs.lambda[idx];
                    j["c_k"] = cs.c[idx];
                    j["method"] = method;
                    out.stream() << j.dump() << '\n';
                }
            }
        } else if (*emb) {
            const auto G = gmbm::load_graph(emb_graph);
            const int d = graph_d(G, emb_d);
            const double lambda1 = embedding_lambda1(G, d, emb_lambda1, emb_auto, g.seed);
            const auto dec = gmbm::eigentop(G, static_cast<std::size_t>(d) + 1);
            gmbm::write_embedding(out.stream(), gmbm::build_embedding(dec, d, lambda1).U_hat);
        } else if (*clu) {
            const auto G = gmbm::load_graph(clu_graph);
            int d_est = clu_d_est.value_or(G.params.d);
            if (clu_auto) {
                const int guess = clu_d_guess.value_or(G.params.d);
                if (guess < 1) throw gmbm::InvalidParameter("--auto needs --d-guess or a header d");
                const int i_max = gmbm::default_gap_range(guess, G.n);
                const auto dec = gmbm::eigentop(G, std::min(G.n, static_cast<std::size_t>(i_max) + 2));
                d_est = gmbm::detect_dimension({dec.eigenvalues.data(), static_cast<std::size_t>(dec.eigenvalues.size())},
                                               i_max);
                std::cerr << "d_est = " << d_est << '\n';
            }
            const auto cut = clu_cut == "median" ? gmbm::CutRule::median : gmbm::CutRule::zero;
            for (const int y : gmbm::cluster_graph(G, std::max(d_est, 1), cut)) out.stream() << y << '\n';
        } else if (*tst) {
            const auto G = gmbm::load_graph(tst_graph);
            gmbm::ModelParams P = G.params;
            P.n = G.n;
            P.d = graph_d(G, std::nullopt);
            P.p = graph_p(G);
            gmbm::TestPolicy policy;
            policy.kind = tst_policy == "paper" ? gmbm::TestPolicyKind::paper_formula : gmbm::TestPolicyKind::empirical_null;
            policy.alpha = tst_alpha;
            policy.trials = tst_trials;
            policy.beta = tst_beta;
            policy.seed = g.seed;
            const auto dec = gmbm::eigentop(G, 2);
            const auto r = gmbm::test_two_community(dec, P, policy);
            ordered_json j;
            j["statistic"] = r.statistic;
            j["threshold"] = r.threshold;
            j["policy"] = std::string(gmbm::to_string(r.policy));
            j["decision"] = std::string(gmbm::to_string(r.decision));
            j["null_trials"] = r.null_trials ? ordered_json(*r.null_trials) : ordered_json(nullptr);
            j["null_level"] = optional_json(r.null_level);
            out.stream() << j.dump() << '\n';
        } else if (*met) {
            const auto G = gmbm::load_graph(met_graph);
            const auto latents = gmbm::load_latents(met_latents);
            const auto U_hat = gmbm::load_embedding(met_embedding);
            if (latents.n() != G.n || static_cast<std::size_t>(U_hat.rows()) != G.n)
                throw gmbm::InvalidInput("graph, latents and embedding disagree on n");
            gmbm::ErrorReport report;
            const auto cols = std::max(U_hat.cols(), latents.U.cols());
            gmbm::RowMatrix A = gmbm::RowMatrix::Zero(U_hat.rows(), cols), B = gmbm::RowMatrix::Zero(U_hat.rows(), cols);
            A.leftCols(U_hat.cols()) = U_hat;
            B.leftCols(latents.U.cols()) = latents.U;
            const auto pe = gmbm::pair_error(A, B);
            const auto oe = gmbm::operator_error(A, B);
            report.pair_error_abs = pe.abs;
            report.pair_norm = pe.norm;
            report.relative_pair_error = pe.relative;
            report.op_error = oe.op;
            report.fro_error = oe.fro;
            const auto labels = gmbm::cluster_graph(G, latents.d());
            report.overlap = gmbm::label_overlap(latents.labels, labels);
            report.accuracy = gmbm::label_accuracy(latents.labels, labels);
            report.crossing_edges = gmbm::crossing_edge_count(G, latents.labels);
            if (G.params.tau) {
                const auto coeffs = gmbm::expansion_coefficients(latents.d_tilde, *G.params.tau, 1);
                const auto r = gmbm::linear_residual(G, latents, coeffs);
                report.linear_residual = r.residual;
                report.linear_baseline = r.baseline;
            }
            ordered_json j;
            j["pair_error_abs"] = optional_json(report.pair_error_abs);
            j["pair_norm"] = optional_json(report.pair_norm);
            j["relative_pair_error"] = optional_json(report.relative_pair_error);
            j["op_error"] = optional_json(report.op_error);
            j["fro_error"] = optional_json(report.fro_error);
            j["overlap"] = optional_json(report.overlap);
            j["accuracy"] = optional_json(report.accuracy);
            j["crossing_edges"] = *report.crossing_edges;
            j["linear_residual"] = optional_json(report.linear_residual);
            j["linear_baseline"] = optional_json(report.linear_baseline);
            out.stream() << j.dump() << '\n';
        } else if (*swp) {
            auto config = gmbm::load_sweep_config(swp_config);
            if (!g.out.empty()) config.output = g.out;
            if (app.count("--format")) config.format = output_format(g.format);
            if (app.count("--seed")) config.seed = g.seed;
            const auto summary = gmbm::sweep(config, [](const gmbm::TrialRecord& r) {
                std::cerr << "cell " << r.cell << " trial " << r.trial << (r.failure ? " failed: " + *r.failure : "")
                          << " (" << r.wall_time << " s)\n";
            });
            std::cerr << summary.cells << " cells, " << summary.trials_run << " trials run, " << summary.trials_resumed
                      << " resumed, " << summary.failures << " failed\n";
            return 0;
        } else if (*te) {
            gmbm::ModelParams P;
            P.n = te_n;
            P.d = te_d;
            P.mu = te_mu;
            P.p = te_p;
            P.seed = g.seed;
            const auto r = gmbm::estimate_test_errors(P, te_alpha, te_null, te_alt, root);
            ordered_json j;
            j["type1"] = r.type1;
            j["type2"] = r.type2;
            j["threshold"] = r.threshold;
            j["tau_null"] = r.tau_null;
            j["null_trials"] = te_null;
            j["alt_trials"] = te_alt;
            out.stream() << j.dump() << '\n';
        } else if (*au) {
            gmbm::ModelParams P;
            P.n = au_n;
            P.d = au_d;
            P.mu = au_mu;
            P.p = au_p;
            P.seed = g.seed;
            const auto r = gmbm::detection_auc(P, au_trials, root);
            ordered_json j;
            j["auc"] = r.auc;
            j["se"] = r.se;
            j["trials"] = au_trials;
            out.stream() << j.dump() << '\n';
        }
        out.finish();
    } catch (const gmbm::InvalidParameter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const gmbm::InvalidInput& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const gmbm::CapacityError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
