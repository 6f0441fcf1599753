#include "gmbm/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"

#include "gmbm/calibrate.hpp"
#include "gmbm/error.hpp"
#include "gmbm/gegenbauer.hpp"
#include "gmbm/io.hpp"

namespace gmbm {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

RowMatrix pad_columns(const RowMatrix& M, Eigen::Index cols) {
    if (M.cols() >= cols) return M;
    RowMatrix out = RowMatrix::Zero(M.rows(), cols);
    out.leftCols(M.cols()) = M;
    return out;
}

std::string param_key(int d, double p) { return "d=" + std::to_string(d) + ";p=" + format_double(p); }

std::string null_key(std::size_t n, int d, double p) { return "n=" + std::to_string(n) + ";" + param_key(d, p); }

// Shared by every mu at a given (d, p), so thresholds at different mu come
// from the same inner-product draws.
RngStream calibration_stream(const RngStream& root, int d, double p) {
    return root.child("calibrate").child(param_key(d, p));
}

// Solved down to a single draw so that thresholds compared across mu hit the
// same estimated edge probability on the shared sample.
double calibrated_tau(int d, double mu, double p, const RngStream& stream, std::size_t samples) {
    return calibrate_tau(d, mu, p, 1.0 / static_cast<double>(samples), stream, samples).tau;
}

}  // namespace

std::string_view to_string(Task task) {
    switch (task) {
        case Task::embed: return "embed";
        case Task::cluster: return "cluster";
        case Task::test: return "test";
        case Task::residual: return "residual";
        case Task::crossing: return "crossing";
        case Task::auc: return "auc";
    }
    return "unknown";
}

std::optional<Task> parse_task(std::string_view name) {
    for (const auto t : kAllTasks)
        if (to_string(t) == name) return t;
    return std::nullopt;
}

double mu_star(std::size_t n, int d, double p) {
    const double nn = static_cast<double>(n);
    return std::max(std::pow(d, -0.75), std::pow(nn * p * d, -0.25));
}

double MuSpec::resolve(std::size_t n, int d, double p) const {
    const double nn = static_cast<double>(n);
    switch (base) {
        case Base::constant: return multiplier;
        case Base::d: return multiplier * std::pow(d, exponent);
        case Base::nd: return multiplier * std::pow(nn * d, exponent);
        case Base::npd: return multiplier * std::pow(nn * p * d, exponent);
        case Base::logn_over_d: return multiplier * std::pow(std::log(nn) / d, exponent);
        case Base::mustar: return multiplier * mu_star(n, d, p);
    }
    return multiplier;
}

MuSpec MuSpec::parse(std::string_view text) {
    std::string s;
    for (const char c : text)
        if (c != ' ' && c != '\t') s.push_back(c);
    if (s.empty()) throw InvalidParameter("empty mu value");

    auto number = [&](std::string_view v) -> std::optional<double> {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), value);
        if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) return std::nullopt;
        return value;
    };

    MuSpec spec;
    spec.text = s;
    if (const auto v = number(s)) {
        spec.multiplier = *v;
        return spec;
    }
    std::string_view rest = s;
    spec.multiplier = 1.0;
    if (const auto star = rest.find('*'); star != std::string_view::npos) {
        const auto m = number(rest.substr(0, star));
        if (!m) throw InvalidParameter("bad mu multiplier in '" + s + "'");
        spec.multiplier = *m;
        rest = rest.substr(star + 1);
    }
    if (rest == "mustar") {
        spec.base = Base::mustar;
        return spec;
    }
    const auto caret = rest.find('^');
    if (caret == std::string_view::npos) throw InvalidParameter("mu preset '" + s + "' needs an exponent");
    std::string_view base = rest.substr(0, caret);
    const auto exponent = number(rest.substr(caret + 1));
    if (!exponent) throw InvalidParameter("bad mu exponent in '" + s + "'");
    spec.exponent = *exponent;
    if (base.size() >= 2 && base.front() == '(' && base.back() == ')') base = base.substr(1, base.size() - 2);
    if (base == "d")
        spec.base = Base::d;
    else if (base == "nd")
        spec.base = Base::nd;
    else if (base == "npd")
        spec.base = Base::npd;
    else if (base == "logn/d")
        spec.base = Base::logn_over_d;
    else
        throw InvalidParameter("unknown mu scaling '" + std::string(base) + "'");
    return spec;
}

TrialRecord run_trial(ModelParams params, TaskSet tasks, const RngStream& stream, const TrialOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    TrialRecord rec;
    rec.params = params;
    rec.stream_key = stream.key() ^ mix64(stream.id());
    try {
        if (!params.tau) {
            params.validate();
            params.tau = calibrated_tau(params.d, params.mu, *params.p, stream.child("calibrate"), options.calibration_samples);
        }
        rec.params = params;
        const auto draw = draw_graph(params, stream.child("graph"));
        const auto& G = draw.graph;
        rec.edges = G.edge_count;

        const bool spectral = tasks.contains(Task::embed) || tasks.contains(Task::cluster) ||
                              tasks.contains(Task::test) || tasks.contains(Task::auc);
        if (spectral) {
            std::size_t m = 2;
            int i_max = 0;
            if (options.detect_dimension) {
                i_max = default_gap_range(params.d, params.n);
                m = std::max<std::size_t>(m, static_cast<std::size_t>(i_max) + 2);
            }
            if (tasks.contains(Task::embed) || tasks.contains(Task::cluster))
                m = std::max<std::size_t>(m, static_cast<std::size_t>(params.d) + 1);
            m = std::min(m, params.n);
            const auto dec = eigentop(G, m, options.eigen);
            int d_use = params.d;
            if (options.detect_dimension) {
                d_use = detect_dimension({dec.eigenvalues.data(), static_cast<std::size_t>(dec.eigenvalues.size())},
                                         i_max, options.gap_gamma);
                rec.d_est = d_use;
            }
            rec.statistic = dec.eigenvalues(1);

            if (tasks.contains(Task::embed)) {
                const double lambda1 = lambda1_closed_form(params.d_tilde(), *params.tau);
                const auto emb = build_embedding(dec, std::max(d_use, 2), lambda1);
                const auto cols = std::max(emb.U_hat.cols(), draw.latents.U.cols());
                const RowMatrix U_hat = pad_columns(emb.U_hat, cols);
                const RowMatrix U = pad_columns(draw.latents.U, cols);
                const auto pe = pair_error(U_hat, U);
                const auto oe = operator_error(U_hat, U);
                rec.errors.pair_error_abs = pe.abs;
                rec.errors.pair_norm = pe.norm;
                rec.errors.relative_pair_error = pe.relative;
                rec.errors.op_error = oe.op;
                rec.errors.fro_error = oe.fro;
            }
            if (tasks.contains(Task::cluster)) {
                const auto labels = labels_from_decomposition(dec, options.cut);
                rec.errors.overlap = label_overlap(draw.latents.labels, labels);
                rec.errors.accuracy = label_accuracy(draw.latents.labels, labels);
            }
            if (tasks.contains(Task::test)) {
                const auto decision = test_two_community(dec, params, options.policy);
                rec.threshold = decision.threshold;
                rec.decision = decision.decision;
            }
            if (tasks.contains(Task::auc)) {
                ModelParams null_params = params;
                null_params.mu = 0.0;
                null_params.source = ThresholdSource::edge_probability;
                null_params.tau = options.null_tau;
                if (!null_params.tau)
                    null_params.tau = calibrated_tau(params.d, 0.0, *params.p, stream.child("calibrate"),
                                                     options.calibration_samples);
                const auto null_draw = draw_graph(null_params, stream.child("null-graph"));
                rec.null_statistic = second_eigenvalue(null_draw.graph, options.eigen);
            }
        }
        if (tasks.contains(Task::residual)) {
            const auto coeffs = expansion_coefficients(params.d_tilde(), *params.tau, 1);
            const auto r = linear_residual(G, draw.latents, coeffs, options.residual);
            rec.errors.linear_residual = r.residual;
            rec.errors.linear_baseline = r.baseline;
        }
        if (tasks.contains(Task::crossing)) rec.errors.crossing_edges = crossing_edge_count(G, draw.latents.labels);
    } catch (const Error& e) {
        rec.failure = e.what();
    }
    rec.wall_time = seconds_since(start);
    return rec;
}

// ---------------------------------------------------------------------------
// Sweep configuration

void SweepConfig::validate() const {
    if (n.empty() || d.empty() || p.empty() || mu.empty()) throw InvalidParameter("every grid needs at least one value");
    if (trials < 1) throw InvalidParameter("trials must be at least 1");
    if (tasks.empty()) throw InvalidParameter("no tasks selected");
    if (output.empty()) throw InvalidParameter("no output path");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("alpha must lie in (0, 1)");
    if (tasks.contains(Task::test) && policy == TestPolicyKind::empirical_null && null_trials < 20)
        throw InvalidParameter("null_trials must be at least 20");
    if (calibration_samples < 10'000) throw InvalidParameter("calibration_samples must be at least 10^4");
    for (const auto& cell : expand_cells(*this)) {
        ModelParams P;
        P.n = cell.n;
        P.d = cell.d;
        P.p = cell.p;
        P.mu = cell.mu_value;
        P.validate();
    }
}

namespace {

std::string trim_copy(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = value.find(',', start);
        auto item = trim_copy(value.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (item.empty()) throw InvalidParameter("empty item in list '" + std::string(value) + "'");
        out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
T parse_number(const std::string& s, std::string_view key) {
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw InvalidParameter("bad value '" + s + "' for " + std::string(key));
    return value;
}

bool parse_bool(const std::string& s, std::string_view key) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw InvalidParameter("bad boolean '" + s + "' for " + std::string(key));
}

}  // namespace

SweepConfig parse_sweep_config(std::istream& in) {
    SweepConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string text = trim_copy(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw InvalidParameter("line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim_copy(text.substr(0, eq));
        const std::string value = trim_copy(text.substr(eq + 1));
        if (value.empty()) throw InvalidParameter("line " + std::to_string(line_no) + ": empty value for " + key);

        if (key == "n") {
            config.n.clear();
            for (const auto& v : split_list(value)) config.n.push_back(parse_number<std::size_t>(v, key));
        } else if (key == "d") {
            config.d.clear();
            for (const auto& v : split_list(value)) config.d.push_back(parse_number<int>(v, key));
        } else if (key == "p") {
            config.p.clear();
            for (const auto& v : split_list(value)) config.p.push_back(parse_number<double>(v, key));
        } else if (key == "mu") {
            config.mu.clear();
            for (const auto& v : split_list(value)) config.mu.push_back(MuSpec::parse(v));
        } else if (key == "trials") {
            config.trials = parse_number<int>(value, key);
        } else if (key == "seed") {
            config.seed = parse_number<std::uint64_t>(value, key);
        } else if (key == "tasks") {
            config.tasks = {};
            for (const auto& v : split_list(value)) {
                const auto task = parse_task(v);
                if (!task) throw InvalidParameter("unknown task '" + v + "'");
                config.tasks.insert(*task);
            }
        } else if (key == "output") {
            config.output = value;
        } else if (key == "format") {
            if (value == "csv")
                config.format = OutputFormat::csv;
            else if (value == "jsonl")
                config.format = OutputFormat::jsonl;
            else
                throw InvalidParameter("format must be csv or jsonl");
        } else if (key == "policy") {
            if (value == "null")
                config.policy = TestPolicyKind::empirical_null;
            else if (value == "paper")
                config.policy = TestPolicyKind::paper_formula;
            else
                throw InvalidParameter("policy must be null or paper");
        } else if (key == "alpha") {
            config.alpha = parse_number<double>(value, key);
        } else if (key == "null_trials") {
            config.null_trials = parse_number<int>(value, key);
        } else if (key == "beta") {
            config.beta = parse_number<double>(value, key);
        } else if (key == "detect_dimension") {
            config.detect_dimension = parse_bool(value, key);
        } else if (key == "calibration_samples") {
            config.calibration_samples = parse_number<std::size_t>(value, key);
        } else {
            throw InvalidParameter("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return config;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open sweep config " + path.string());
    return parse_sweep_config(in);
}

std::vector<SweepCell> expand_cells(const SweepConfig& config) {
    std::vector<SweepCell> cells;
    for (const auto n : config.n)
        for (const auto d : config.d)
            for (const auto p : config.p)
                for (const auto& mu : config.mu) {
                    SweepCell cell;
                    cell.index = cells.size();
                    cell.n = n;
                    cell.d = d;
                    cell.p = p;
                    cell.mu = mu;
                    cell.mu_value = mu.resolve(n, d, p);
                    cell.key = null_key(n, d, p) + ";mu=" + mu.text;
                    cells.push_back(std::move(cell));
                }
    return cells;
}

// ---------------------------------------------------------------------------
// Sweep output

namespace {

enum class Kind { integer, real, text };

struct Column {
    std::string name;
    Kind kind;
};

const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{
        "edges",       "d_est",          "pair_error_abs",  "pair_norm", "relative_pair_error", "op_error",
        "fro_error",   "overlap",        "accuracy",        "crossing_edges", "linear_residual", "linear_baseline",
        "statistic",   "threshold",      "reject",          "null_statistic"};
    return names;
}

const std::vector<Column>& columns() {
    static const std::vector<Column> cols = [] {
        std::vector<Column> c{{"schema_version", Kind::integer}, {"row", Kind::text},   {"cell", Kind::integer},
                              {"trial", Kind::integer},          {"n", Kind::integer},  {"d", Kind::integer},
                              {"p", Kind::real},                 {"mu_spec", Kind::text}, {"mu", Kind::real},
                              {"tau", Kind::real},               {"seed", Kind::integer}};
        for (const auto& m : metric_names()) c.push_back({m, Kind::real});
        c.push_back({"failure", Kind::text});
        c.push_back({"trials_ok", Kind::integer});
        c.push_back({"failures", Kind::integer});
        for (const auto& m : metric_names()) c.push_back({m + "_sd", Kind::real});
        c.push_back({"auc", Kind::real});
        c.push_back({"auc_se", Kind::real});
        return c;
    }();
    return cols;
}

std::size_t column_index(const std::string& name) {
    const auto& cols = columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i].name == name) return i;
    throw Error("unknown column " + name);
}

using Row = std::vector<std::optional<std::string>>;

std::string sanitize(std::string s) {
    for (auto& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

Row empty_row() { return Row(columns().size()); }

void set(Row& row, const std::string& name, std::optional<std::string> value) { row[column_index(name)] = std::move(value); }

std::optional<std::string> num(std::optional<double> v) {
    if (!v) return std::nullopt;
    return format_double(*v);
}

Row cell_row(const SweepCell& cell, double tau, std::uint64_t seed, std::string_view kind) {
    Row row = empty_row();
    set(row, "schema_version", std::to_string(kSchemaVersion));
    set(row, "row", std::string(kind));
    set(row, "cell", std::to_string(cell.index));
    set(row, "n", std::to_string(cell.n));
    set(row, "d", std::to_string(cell.d));
    set(row, "p", format_double(cell.p));
    set(row, "mu_spec", cell.mu.text);
    set(row, "mu", format_double(cell.mu_value));
    set(row, "tau", format_double(tau));
    set(row, "seed", std::to_string(seed));
    return row;
}

Row trial_row(const SweepCell& cell, double tau, std::uint64_t seed, const TrialRecord& rec) {
    Row row = cell_row(cell, tau, seed, "trial");
    set(row, "trial", std::to_string(rec.trial));
    const auto& e = rec.errors;
    if (!rec.failure) {
        set(row, "edges", std::to_string(rec.edges));
        if (rec.d_est) set(row, "d_est", std::to_string(*rec.d_est));
    }
    set(row, "pair_error_abs", num(e.pair_error_abs));
    set(row, "pair_norm", num(e.pair_norm));
    set(row, "relative_pair_error", num(e.relative_pair_error));
    set(row, "op_error", num(e.op_error));
    set(row, "fro_error", num(e.fro_error));
    set(row, "overlap", num(e.overlap));
    set(row, "accuracy", num(e.accuracy));
    if (e.crossing_edges) set(row, "crossing_edges", std::to_string(*e.crossing_edges));
    set(row, "linear_residual", num(e.linear_residual));
    set(row, "linear_baseline", num(e.linear_baseline));
    if (!rec.failure) set(row, "statistic", num(rec.statistic));
    set(row, "threshold", num(rec.threshold));
    if (rec.decision) set(row, "reject", *rec.decision == Decision::reject_h0 ? "1" : "0");
    set(row, "null_statistic", num(rec.null_statistic));
    if (rec.failure) set(row, "failure", sanitize(*rec.failure));
    return row;
}

double to_double(const std::string& s) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw InvalidInput("bad number '" + s + "' in sweep output");
    return value;
}

struct Welford {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    std::optional<double> sd() const {
        if (count < 2) return std::nullopt;
        return std::sqrt(m2 / static_cast<double>(count - 1));
    }
};

Row aggregate_row(const SweepCell& cell, double tau, std::uint64_t seed, const std::vector<Row>& trials) {
    Row row = cell_row(cell, tau, seed, "aggregate");
    std::size_t ok = 0, failed = 0;
    std::vector<double> alt, null;
    for (const auto& t : trials) (t[column_index("failure")] ? failed : ok) += 1;
    for (const auto& m : metric_names()) {
        Welford w;
        const auto idx = column_index(m);
        for (const auto& t : trials)
            if (t[idx]) w.add(to_double(*t[idx]));
        if (w.count == 0) continue;
        set(row, m, format_double(w.mean));
        set(row, m + "_sd", num(w.sd()));
    }
    const auto s_idx = column_index("statistic"), n_idx = column_index("null_statistic");
    for (const auto& t : trials) {
        if (t[s_idx] && t[n_idx]) {
            alt.push_back(to_double(*t[s_idx]));
            null.push_back(to_double(*t[n_idx]));
        }
    }
    if (!alt.empty()) {
        const auto auc = auc_from_samples(null, alt);
        set(row, "auc", format_double(auc.auc));
        set(row, "auc_se", format_double(auc.se));
    }
    set(row, "trials_ok", std::to_string(ok));
    set(row, "failures", std::to_string(failed));
    return row;
}

std::string csv_header() {
    std::string out;
    for (const auto& c : columns()) {
        if (!out.empty()) out += ',';
        out += c.name;
    }
    return out;
}

std::string render(const Row& row, OutputFormat format) {
    const auto& cols = columns();
    if (format == OutputFormat::csv) {
        std::string out;
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (i) out += ',';
            if (row[i]) out += *row[i];
        }
        return out;
    }
    nlohmann::ordered_json j;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!row[i]) continue;
        switch (cols[i].kind) {
            case Kind::integer: j[cols[i].name] = std::stoull(*row[i]); break;
            case Kind::real: j[cols[i].name] = to_double(*row[i]); break;
            case Kind::text: j[cols[i].name] = *row[i]; break;
        }
    }
    return j.dump();
}

Row parse_row(const std::string& line, OutputFormat format) {
    const auto& cols = columns();
    Row row = empty_row();
    if (format == OutputFormat::csv) {
        std::size_t start = 0, i = 0;
        while (true) {
            if (i >= cols.size()) throw InvalidInput("too many fields in sweep row");
            const auto comma = line.find(',', start);
            const auto field = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
            if (!field.empty()) row[i] = field;
            ++i;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (i != cols.size()) throw InvalidInput("too few fields in sweep row");
        return row;
    }
    const auto j = nlohmann::ordered_json::parse(line);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (!j.contains(cols[i].name) || j[cols[i].name].is_null()) continue;
        const auto& v = j[cols[i].name];
        switch (cols[i].kind) {
            case Kind::integer: row[i] = std::to_string(v.get<std::uint64_t>()); break;
            case Kind::real: row[i] = format_double(v.get<double>()); break;
            case Kind::text: row[i] = v.get<std::string>(); break;
        }
    }
    return row;
}

// Completed rows found in an existing output file, validated against the
// expected sequence. Returns the byte length of the valid prefix.
struct ExistingOutput {
    std::vector<std::string> lines;
    std::size_t valid_bytes = 0;
};

ExistingOutput read_existing(const std::filesystem::path& path) {
    ExistingOutput out;
    std::ifstream in(path, std::ios::binary);
    if (!in) return out;
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        if (nl == std::string::npos) break;  // trailing partial line from an interrupted write
        out.lines.push_back(text.substr(start, nl - start));
        start = nl + 1;
        out.valid_bytes = start;
    }
    return out;
}

bool same_identity(const Row& a, const Row& b) {
    for (const auto* name : {"schema_version", "row", "cell", "trial", "n", "d", "p", "mu_spec", "mu", "tau", "seed"})
        if (a[column_index(name)] != b[column_index(name)]) return false;
    return true;
}

struct CellSetup {
    double tau = 0.0;
    std::optional<double> null_tau;
    std::optional<double> threshold;
    std::optional<double> lambda1_null;
};

}  // namespace

SweepSummary sweep(const SweepConfig& config, const std::function<void(const TrialRecord&)>& progress) {
    config.validate();
    const auto cells = expand_cells(config);
    const RngStream root(config.seed);
    const std::size_t samples = config.calibration_samples;

    std::map<std::tuple<int, double, double>, double> tau_cache;  // (d, mu, p)
    auto tau_for = [&](int d, double mu, double p) {
        const auto key = std::make_tuple(d, mu, p);
        if (const auto it = tau_cache.find(key); it != tau_cache.end()) return it->second;
        const double tau = calibrated_tau(d, mu, p, calibration_stream(root, d, p), samples);
        tau_cache.emplace(key, tau);
        return tau;
    };
    std::map<std::tuple<std::size_t, int, double>, double> threshold_cache;  // (n, d, p)
    auto threshold_for = [&](std::size_t n, int d, double p) {
        const auto key = std::make_tuple(n, d, p);
        if (const auto it = threshold_cache.find(key); it != threshold_cache.end()) return it->second;
        const double thr = empirical_null_threshold(n, d, p, config.alpha, config.null_trials,
                                                    root.child("null").child(null_key(n, d, p)), tau_for(d, 0.0, p))
                               .threshold;
        threshold_cache.emplace(key, thr);
        return thr;
    };

    // Validate what is already on disk before touching it.
    const std::string header = csv_header();
    auto existing = read_existing(config.output);
    std::size_t cursor = 0;  // next existing line to consume
    if (!existing.lines.empty()) {
        if (config.format == OutputFormat::csv) {
            if (existing.lines.front() != header)
                throw InvalidParameter("existing output " + config.output.string() + " has a different header");
            cursor = 1;
        }
    }

    std::ofstream out;
    auto open_output = [&] {
        if (existing.lines.empty()) {
            out.open(config.output, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + config.output.string());
            if (config.format == OutputFormat::csv) out << header << '\n';
        } else {
            std::filesystem::resize_file(config.output, existing.valid_bytes);
            out.open(config.output, std::ios::binary | std::ios::app);
            if (!out) throw Error("cannot write " + config.output.string());
        }
        out.flush();
        if (!out) throw Error("write to " + config.output.string() + " failed");
    };
    open_output();
    auto emit = [&](const Row& row) {
        out << render(row, config.format) << '\n';
        out.flush();
        if (!out) throw Error("write to " + config.output.string() + " failed");
    };

    SweepSummary summary;
    summary.cells = cells.size();
    for (const auto& cell : cells) {
        CellSetup setup;
        setup.tau = tau_for(cell.d, cell.mu_value, cell.p);
        if (config.tasks.contains(Task::auc)) setup.null_tau = tau_for(cell.d, 0.0, cell.p);

        std::vector<Row> trial_rows(static_cast<std::size_t>(config.trials));
        std::size_t done = 0;
        // Reuse consistent trial rows from the existing file.
        while (done < trial_rows.size() && cursor < existing.lines.size()) {
            Row found = parse_row(existing.lines[cursor], config.format);
            TrialRecord probe;
            probe.trial = done;
            const Row expected = trial_row(cell, setup.tau, config.seed, probe);
            if (!same_identity(found, expected))
                throw InvalidParameter("existing output row " + std::to_string(cursor + 1) +
                                       " does not match the sweep configuration");
            trial_rows[done++] = std::move(found);
            ++cursor;
        }
        summary.trials_resumed += done;

        if (done < trial_rows.size()) {
            if (config.tasks.contains(Task::test)) {
                if (config.policy == TestPolicyKind::empirical_null) {
                    setup.threshold = threshold_for(cell.n, cell.d, cell.p);
                } else {
                    setup.lambda1_null = lambda1_closed_form(cell.d - 1, tau_for(cell.d, 0.0, cell.p));
                }
            }
            TrialOptions options;
            options.policy.kind = config.policy;
            options.policy.alpha = config.alpha;
            options.policy.trials = config.null_trials;
            options.policy.beta = config.beta;
            options.policy.threshold = setup.threshold;
            options.policy.lambda1_null = setup.lambda1_null;
            options.detect_dimension = config.detect_dimension;
            options.calibration_samples = samples;
            options.null_tau = setup.null_tau;

            ModelParams params;
            params.n = cell.n;
            params.d = cell.d;
            params.p = cell.p;
            params.mu = cell.mu_value;
            params.tau = setup.tau;
            params.seed = config.seed;

            const RngStream cell_stream = root.child("cell").child(cell.key);
            const auto first = static_cast<long>(done);
            const auto last = static_cast<long>(trial_rows.size());
            std::vector<TrialRecord> records(trial_rows.size());
#pragma omp parallel for schedule(dynamic, 1)
            for (long t = first; t < last; ++t) {
                auto rec = run_trial(params, config.tasks, cell_stream.child(static_cast<std::uint64_t>(t)), options);
                rec.cell = cell.index;
                rec.trial = static_cast<std::size_t>(t);
                records[static_cast<std::size_t>(t)] = std::move(rec);
            }
            for (long t = first; t < last; ++t) {
                const auto& rec = records[static_cast<std::size_t>(t)];
                trial_rows[static_cast<std::size_t>(t)] = trial_row(cell, setup.tau, config.seed, rec);
                emit(trial_rows[static_cast<std::size_t>(t)]);
                ++summary.trials_run;
                if (rec.failure) ++summary.failures;
                if (progress) progress(rec);
            }
        }

        const Row aggregate = aggregate_row(cell, setup.tau, config.seed, trial_rows);
        if (cursor < existing.lines.size()) {
            const Row found = parse_row(existing.lines[cursor], config.format);
            if (!same_identity(found, aggregate))
                throw InvalidParameter("existing output row " + std::to_string(cursor + 1) +
                                       " does not match the sweep configuration");
            ++cursor;
        } else {
            emit(aggregate);
        }
    }
    if (cursor < existing.lines.size())
        throw InvalidParameter("existing output has more rows than the sweep configuration produces");
    return summary;
}

// ---------------------------------------------------------------------------
// Testing and detection experiments

std::vector<double> eta1_samples(const ModelParams& params, int trials, const RngStream& stream) {
    if (!params.tau) throw InvalidParameter("eta1_samples needs a resolved threshold");
    std::vector<double> out(static_cast<std::size_t>(std::max(trials, 0)));
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < trials; ++t) {
        const auto draw = draw_graph(params, stream.child(static_cast<std::uint64_t>(t)));
        out[static_cast<std::size_t>(t)] = second_eigenvalue(draw.graph);
    }
    return out;
}

TestErrors estimate_test_errors(const ModelParams& params, double alpha, int null_trials, int alt_trials,
                                const RngStream& stream, std::optional<int> eval_null_trials) {
    params.validate();
    if (!params.p) throw InvalidParameter("estimate_test_errors needs p");
    if (null_trials < 20) throw InvalidParameter("null_trials must be at least 20");
    if (alt_trials < 1) throw InvalidParameter("alt_trials must be at least 1");
    const int eval_null = eval_null_trials.value_or(null_trials);
    if (eval_null < 1) throw InvalidParameter("evaluation null trials must be at least 1");

    const RngStream calibration = stream.child("calibrate");
    TestErrors out;
    out.tau_null = calibrated_tau(params.d, 0.0, *params.p, calibration, kDefaultCalibrationSamples);
    const auto null = empirical_null_threshold(params.n, params.d, *params.p, alpha, null_trials,
                                               stream.child("null-calibration"), out.tau_null);
    out.threshold = null.threshold;

    ModelParams null_params = params;
    null_params.mu = 0.0;
    null_params.tau = out.tau_null;
    null_params.source = ThresholdSource::edge_probability;
    out.null_statistics = eta1_samples(null_params, eval_null, stream.child("null-eval"));

    ModelParams alt = params;
    if (!alt.tau) alt.tau = calibrated_tau(params.d, params.mu, *params.p, calibration, kDefaultCalibrationSamples);
    out.alt_statistics = eta1_samples(alt, alt_trials, stream.child("alt"));

    const auto rejected = [&](double s) { return decide(s, out.threshold) == Decision::reject_h0; };
    const auto null_rejections = std::count_if(out.null_statistics.begin(), out.null_statistics.end(), rejected);
    const auto alt_rejections = std::count_if(out.alt_statistics.begin(), out.alt_statistics.end(), rejected);
    out.type1 = static_cast<double>(null_rejections) / eval_null;
    out.type2 = 1.0 - static_cast<double>(alt_rejections) / alt_trials;
    return out;
}

AucEstimate auc_from_samples(std::vector<double> null_statistics, std::vector<double> alt_statistics) {
    if (null_statistics.empty() || alt_statistics.empty()) throw InvalidInput("AUC needs both samples");
    const std::size_t n0 = null_statistics.size(), n1 = alt_statistics.size();
    // Mann-Whitney U via midranks of the pooled sample.
    std::vector<std::pair<double, int>> pooled;
    pooled.reserve(n0 + n1);
    for (const double s : null_statistics) pooled.emplace_back(s, 0);
    for (const double s : alt_statistics) pooled.emplace_back(s, 1);
    std::sort(pooled.begin(), pooled.end());
    double alt_rank_sum = 0.0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (pooled[k].second == 1) alt_rank_sum += midrank;
        i = j;
    }
    const double m0 = static_cast<double>(n0), m1 = static_cast<double>(n1);
    const double u = alt_rank_sum - m1 * (m1 + 1.0) / 2.0;
    AucEstimate out;
    out.auc = u / (m0 * m1);
    const double a = out.auc;
    const double q1 = a / (2.0 - a);
    const double q2 = 2.0 * a * a / (1.0 + a);
    const double var = (a * (1.0 - a) + (m1 - 1.0) * (q1 - a * a) + (m0 - 1.0) * (q2 - a * a)) / (m0 * m1);
    out.se = std::sqrt(std::max(var, 0.0));
    out.null_statistics = std::move(null_statistics);
    out.alt_statistics = std::move(alt_statistics);
    return out;
}

AucEstimate detection_auc(const ModelParams& params, int trials, const RngStream& stream,
                          std::optional<std::vector<double>> null_statistics) {
    params.validate();
    if (trials < 50) throw InvalidParameter("detection_auc needs at least 50 trials");
    if (!params.p) throw InvalidParameter("detection_auc needs p");
    const RngStream calibration = stream.child("calibrate");

    std::vector<double> null;
    if (null_statistics) {
        null = std::move(*null_statistics);
    } else {
        ModelParams null_params = params;
        null_params.mu = 0.0;
        null_params.source = ThresholdSource::edge_probability;
        null_params.tau = calibrated_tau(params.d, 0.0, *params.p, calibration, kDefaultCalibrationSamples);
        null = eta1_samples(null_params, trials, stream.child("null"));
    }
    ModelParams alt = params;
    if (!alt.tau) alt.tau = calibrated_tau(params.d, params.mu, *params.p, calibration, kDefaultCalibrationSamples);
    auto alt_stats = eta1_samples(alt, trials, stream.child("alt"));
    return auc_from_samples(std::move(null), std::move(alt_stats));
}

}  // namespace gmbm
