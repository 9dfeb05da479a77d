#include "mfgsec/cli.hpp"

#include "mfgsec/errors.hpp"
#include "mfgsec/random.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace mfgsec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kClusterSeed = 0xE1;
constexpr std::uint64_t kEventSeed = 0xE2;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    return std::all_of(k.begin(), k.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-'; });
}

std::optional<double> to_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    if (b != e && *b == '+') ++b;
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    return v;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

json check_json(const mr::ConditionCheck& c) {
    return {{"statistic", c.statistic}, {"threshold", c.threshold}, {"pass", c.pass}};
}

// Collects written files and emits the per-invocation manifest.
class Artifacts {
public:
    Artifacts(const CliConfig& cli, const ConfigFile& cfg) : cli_(cli), hash_(algo::fnv1a(cfg.canonical())) {
        std::error_code ec;
        fs::create_directories(cli.out_dir, ec);
        if (ec) throw IoError("cannot create " + cli.out_dir.string() + ": " + ec.message());
    }

    fs::path path(const std::string& name) {
        outputs_.push_back(name);
        return cli_.out_dir / name;
    }

    void csv(const std::string& name, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
        algo::write_csv(path(name), header, rows);
    }

    void json_file(const std::string& name, const json& j) { write_json(path(name), j); }

    std::string hash() const { return hex64(hash_); }

    void finish(json extra = json::object()) {
        extra["command"] = cli_.command;
        extra["seed"] = cli_.seed;
        extra["config_hash"] = hash();
        extra["outputs"] = outputs_;
        write_json(cli_.out_dir / "manifest.json", extra);
    }

private:
    const CliConfig& cli_;
    std::uint64_t hash_;
    std::vector<std::string> outputs_;
};

std::vector<double> row_vec(const Eigen::MatrixXd& a, int n) {
    std::vector<double> r(static_cast<std::size_t>(a.cols()));
    Eigen::Map<Eigen::RowVectorXd>(r.data(), a.cols()) = a.row(n);
    return r;
}

mr::ErrorLaw error_law(const std::string& s) {
    if (s == "gaussian") return mr::ErrorLaw::gaussian;
    if (s == "uniform") return mr::ErrorLaw::uniform;
    if (s == "laplace") return mr::ErrorLaw::laplace;
    throw InvalidInput("unknown error law '" + s + "'");
}

hawkes::EveMode eve_mode(const std::string& s) {
    if (s == "extinction") return hawkes::EveMode::extinction;
    if (s == "compensated") return hawkes::EveMode::compensated;
    throw InvalidInput("unknown adversary mode '" + s + "'");
}

const char* eve_mode_name(hawkes::EveMode m) { return m == hawkes::EveMode::extinction ? "extinction" : "compensated"; }

}  // namespace

// ---------------------------------------------------------------------------
// ConfigFile

ConfigFile ConfigFile::parse(std::string_view text) {
    ConfigFile cfg;
    std::string section;
    std::istringstream in{std::string(text)};
    std::size_t line_no = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line_no;
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) throw ParseError("malformed section header", line_no);
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!valid_key(section)) throw ParseError("invalid section name '" + section + "'", line_no);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!valid_key(key)) throw ParseError("invalid key '" + key + "'", line_no);
        if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
        if (value.front() == '"' && (value.size() < 2 || value.back() != '"'))
            throw ParseError("unterminated string", line_no);
        if (value.front() == '[' && value.back() != ']') throw ParseError("unterminated list", line_no);
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.values_.count(full)) throw ParseError("duplicate key '" + full + "'", line_no);
        cfg.values_[full] = {value, line_no};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

void ConfigFile::apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw InvalidInput("override '" + assignment + "' is not key=value");
    const std::string key = trim(std::string_view(assignment).substr(0, eq));
    const std::string value = trim(std::string_view(assignment).substr(eq + 1));
    if (!valid_key(key) || value.empty()) throw InvalidInput("override '" + assignment + "' is not key=value");
    values_[key] = {value, 0};
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

void ConfigFile::bad_value(const std::string& key, const Entry& e, const std::string& expected) {
    const std::string msg = "'" + key + "' expects " + expected + ", got " + e.text;
    if (e.line > 0) throw ParseError(msg, e.line);
    throw InvalidInput("override " + msg);
}

std::optional<double> ConfigFile::optional_number(const std::string& key) const {
    const Entry* e = find(key);
    if (!e) return std::nullopt;
    const auto v = to_double(e->text);
    if (!v) bad_value(key, *e, "a number");
    return v;
}

double ConfigFile::number(const std::string& key, double fallback) const {
    return optional_number(key).value_or(fallback);
}

long long ConfigFile::integer(const std::string& key, long long fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    const auto v = to_double(e->text);
    if (!v || *v != std::floor(*v) || std::abs(*v) > 9e15) bad_value(key, *e, "an integer");
    return static_cast<long long>(*v);
}

bool ConfigFile::boolean(const std::string& key, bool fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->text == "true") return true;
    if (e->text == "false") return false;
    bad_value(key, *e, "true or false");
}

std::string ConfigFile::string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->text.size() >= 2 && e->text.front() == '"') return e->text.substr(1, e->text.size() - 2);
    return e->text;
}

std::vector<double> ConfigFile::numbers(const std::string& key, const std::vector<double>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::string body = e->text;
    if (body.front() == '[') body = body.substr(1, body.size() - 2);
    std::vector<double> out;
    if (trim(body).empty()) return out;
    std::stringstream ss(body);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto v = to_double(trim(item));
        if (!v) bad_value(key, *e, "a list of numbers");
        out.push_back(*v);
    }
    return out;
}

std::string ConfigFile::canonical() const {
    std::string s;
    for (const auto& [k, e] : values_) s += k + "=" + e.text + "\n";
    return s;
}

// ---------------------------------------------------------------------------
// Builders

mfg::MFGGrid grid_from(const ConfigFile& cfg) {
    mfg::MFGGrid g;
    g.horizon = cfg.number("mfg.horizon", 1.0);
    g.x_min = cfg.number("mfg.x_min", -2.0);
    g.x_max = cfg.number("mfg.x_max", 2.0);
    g.nt = static_cast<int>(cfg.integer("mfg.nt", 101));
    g.nx = static_cast<int>(cfg.integer("mfg.nx", 101));
    g.validate();
    return g;
}

mfg::NoiseSpec noise_from(const ConfigFile& cfg, std::uint64_t seed) {
    mfg::NoiseSpec n;
    for (int k = 1; k <= 8; ++k) n.set(k, cfg.number("noise.w" + std::to_string(k), 0.0));
    n.w_prime = cfg.number("noise.w_prime", 0.0);
    n.seed = seed;
    n.validate();
    return n;
}

mfg::MfgProblem problem_from(const ConfigFile& cfg, const mfg::MFGGrid& grid, std::uint64_t seed) {
    mfg::MfgProblem p;
    p.lambda_reg = cfg.number("mfg.lambda", 1.0);
    p.bounds = {cfg.number("mfg.theta_lo", -10.0), cfg.number("mfg.theta_hi", 10.0)};
    p.noise = noise_from(cfg, seed);
    p.diffusion = cfg.boolean("mfg.diffusion", false);

    const double mean = cfg.number("mfg.m0_mean", 0.5);
    const double sd = cfg.number("mfg.m0_sd", 0.25);
    if (!(sd > 0.0)) throw InvalidInput("mfg.m0_sd must be positive");
    p.m0.resize(static_cast<std::size_t>(grid.nx));
    for (int i = 0; i < grid.nx; ++i) {
        const double z = (grid.x(i) - mean) / sd;
        p.m0[static_cast<std::size_t>(i)] = std::exp(-0.5 * z * z);
    }
    const double mass = mfg::density_mass(p.m0, grid.dx());
    if (!(mass > 0.0)) throw InvalidInput("initial density has no mass on the grid");
    for (double& v : p.m0) v /= mass;

    const std::string running = cfg.string("mfg.running_cost", "state");
    if (running == "zero") p.running_cost = [](double, double) { return 0.0; };
    else if (running != "state") throw InvalidInput("mfg.running_cost must be \"state\" or \"zero\"");

    const double tw = cfg.number("mfg.terminal_weight", 0.0);
    if (tw != 0.0) {
        p.terminal.resize(static_cast<std::size_t>(grid.nx));
        for (int i = 0; i < grid.nx; ++i) p.terminal[static_cast<std::size_t>(i)] = tw * grid.x(i);
    }
    const double drift = cfg.number("mfg.drift", 0.0);
    if (drift != 0.0) p.drift.assign(static_cast<std::size_t>(grid.nt), drift);
    return p;
}

mfg::PicardOptions picard_from(const ConfigFile& cfg) {
    mfg::PicardOptions o;
    o.damping = cfg.number("picard.damping", 1.0);
    o.tol = cfg.number("picard.tol", 1e-10);
    o.max_iter = static_cast<int>(cfg.integer("picard.max_iter", 20));
    return o;
}

hawkes::HawkesModel hawkes_from(const ConfigFile& cfg) {
    const auto gamma = cfg.numbers("hawkes.gamma", {1.0});
    const auto alpha = cfg.numbers("hawkes.alpha", {0.5});
    const auto beta = cfg.numbers("hawkes.beta", {1.0});
    const auto n = static_cast<Eigen::Index>(gamma.size());
    if (n == 0) throw InvalidInput("hawkes.gamma must not be empty");
    auto square = [n](const std::vector<double>& v, const char* name) {
        Eigen::MatrixXd m(n, n);
        if (v.size() == 1) m.setConstant(v[0]);
        else if (static_cast<Eigen::Index>(v.size()) == n * n)
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j) m(i, j) = v[static_cast<std::size_t>(i * n + j)];
        else throw InvalidInput(std::string("hawkes.") + name + " needs 1 or dims^2 values (row-major)");
        return m;
    };
    hawkes::HawkesModel m;
    m.gamma = Eigen::Map<const Eigen::VectorXd>(gamma.data(), n);
    m.alpha = square(alpha, "alpha");
    m.beta = square(beta, "beta");
    m.horizon = cfg.number("hawkes.horizon", 100.0);
    m.allow_nonstationary = cfg.boolean("hawkes.allow_nonstationary", false);
    return m;
}

algo::AlgorithmConfig algorithm_from(const ConfigFile& cfg, std::uint64_t seed) {
    algo::AlgorithmConfig c;
    c.grid = grid_from(cfg);
    c.problem = problem_from(cfg, c.grid, seed);
    c.noise = c.problem.noise;
    c.picard = picard_from(cfg);
    c.r_conv = cfg.number("algorithm.r_conv", 1e-3);
    c.max_outer = static_cast<int>(cfg.integer("algorithm.max_outer", 30));
    c.mode = algo::problem_from_string(cfg.string("algorithm.mode", "P1"));
    c.adversary.model = hawkes_from(cfg);
    c.adversary.mode = eve_mode(cfg.string("adversary.mode", "extinction"));
    c.seed = seed;
    c.validate();
    return c;
}

hawkes::LatticeRegion lattice_from(const ConfigFile& cfg) {
    hawkes::LatticeRegion r;
    r.omega_sides = cfg.numbers("lattice.sides", {1.0});
    r.n_dim = static_cast<int>(r.omega_sides.size());
    r.cte = cfg.number("lattice.cte", 2.0);
    r.var_pp = cfg.number("lattice.var_pp", 1.0);
    r.err_prob = cfg.number("lattice.err_prob", 0.0);
    r.validate();
    return r;
}

mr::StructuralModel structural_from(const ConfigFile& cfg) {
    mr::StructuralModel m;
    const auto bx = cfg.numbers("mr.beta_x", {0.5, 0.3, 0.4});
    m.beta_x = Eigen::Map<const Eigen::VectorXd>(bx.data(), static_cast<Eigen::Index>(bx.size()));
    const auto al = cfg.numbers("mr.alpha", std::vector<double>(bx.size(), 0.0));
    if (al.size() == 1) m.alpha = Eigen::VectorXd::Constant(m.beta_x.size(), al[0]);
    else m.alpha = Eigen::Map<const Eigen::VectorXd>(al.data(), static_cast<Eigen::Index>(al.size()));
    m.beta_x0 = cfg.number("mr.beta_x0", 0.0);
    m.gamma_x = cfg.number("mr.gamma_x", 1.0);
    m.theta0 = cfg.number("mr.theta0", 0.0);
    m.theta = cfg.number("mr.theta", 0.5);
    m.gamma_y = cfg.number("mr.gamma_y", 1.0);
    m.var_x = cfg.number("mr.var_x", 1.0);
    m.var_y = cfg.number("mr.var_y", 1.0);
    m.err_x = error_law(cfg.string("mr.err_x", "gaussian"));
    m.err_y = error_law(cfg.string("mr.err_y", "gaussian"));
    mr::validate(m);
    return m;
}

outage::PdfTable load_pdf_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pdf table " + path.string());
    std::vector<double> xs, ds;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("expected x,density", line_no);
        const auto x = to_double(trim(std::string_view(line).substr(0, comma)));
        const auto d = to_double(trim(std::string_view(line).substr(comma + 1)));
        if (!x || !d) {
            if (xs.empty() && line_no == 1) continue;  // header
            throw ParseError("non-numeric pdf row", line_no);
        }
        xs.push_back(*x);
        ds.push_back(*d);
    }
    if (xs.size() < 2) throw InvalidInput("pdf table " + path.string() + " needs at least two rows");
    outage::PdfTable t;
    t.x0 = xs.front();
    t.dx = (xs.back() - xs.front()) / static_cast<double>(xs.size() - 1);
    for (std::size_t i = 0; i < xs.size(); ++i)
        if (std::abs(xs[i] - t.x(i)) > 1e-9 * std::max(1.0, std::abs(xs[i])))
            throw InvalidInput("pdf table " + path.string() + " is not on a uniform grid");
    t.density = std::move(ds);
    t.validate();
    return t;
}

outage::OutageConfig outage_from(const ConfigFile& cfg) {
    outage::OutageConfig c;
    c.phi1 = cfg.number("outage.phi1", 0.5);
    c.phi2 = cfg.optional_number("outage.phi2");
    c.threshold_map = {cfg.number("outage.threshold_scale", 1.0), cfg.number("outage.threshold_offset", 0.0)};
    c.theta_prime = cfg.optional_number("outage.theta_prime");
    c.mc_samples = static_cast<std::size_t>(cfg.integer("outage.mc_samples", 10000));
    c.design_rows = static_cast<std::size_t>(cfg.integer("outage.design_rows", 1000));
    const auto points = static_cast<std::size_t>(cfg.integer("outage.pdf_points", outage::PdfTable::default_points));
    const std::string pdf = cfg.string("outage.pdf", "uniform");
    if (pdf == "uniform") c.pdf_table = outage::PdfTable::from_function([](double) { return 1.0; }, 0.0, 1.0, points);
    else if (pdf == "triangular") c.pdf_table = outage::PdfTable::from_function([](double x) { return 2.0 * x; }, 0.0, 1.0, points);
    else c.pdf_table = load_pdf_csv(pdf);
    c.pdf_table = c.pdf_table.normalized();
    return c;
}

kl::BeamSet beams_from(const ConfigFile& cfg) {
    kl::BeamSet b;
    const auto modes = cfg.numbers("kl.modes", {0.0, 1.0, 2.0});
    const auto re = cfg.numbers("kl.amps_re", std::vector<double>(modes.size(), 1.0));
    const auto im = cfg.numbers("kl.amps_im", std::vector<double>(modes.size(), 0.0));
    if (re.size() != modes.size() || im.size() != modes.size())
        throw InvalidInput("kl.amps_re and kl.amps_im need one value per mode");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        if (modes[i] != std::floor(modes[i])) throw InvalidInput("kl.modes must be integers");
        b.modes.push_back(static_cast<int>(modes[i]));
        b.amps.emplace_back(re[i], im[i]);
    }
    b.turb_sigma = cfg.number("kl.turb_sigma", 0.5);
    b.ring_points = static_cast<std::size_t>(cfg.integer("kl.ring_points", 32));
    b.validate();
    return b;
}

bounds::BoundParams bounds_from(const ConfigFile& cfg) {
    bounds::BoundParams p;
    p.n = cfg.number("bounds.n", 100.0);
    p.c0 = cfg.number("bounds.c0", 1.0);
    p.c1 = cfg.number("bounds.c1", 0.5);
    p.c2 = cfg.number("bounds.c2", 3.0);
    p.c3 = cfg.number("bounds.c3", 1.0);
    p.c4 = cfg.number("bounds.c4", 0.0);
    p.m_norm_max = cfg.number("bounds.m_norm_max", 1.0);
    p.varsigma1 = cfg.number("bounds.varsigma1", 0.0);
    p.varsigma2 = cfg.number("bounds.varsigma2", 1.0);
    p.theta_eve_minus = cfg.number("bounds.theta_eve_minus", 0.0);
    p.theta_eve_plus = cfg.number("bounds.theta_eve_plus", 0.0);
    p.kl_inf = cfg.number("bounds.kl_inf", 0.0);
    p.set_size = cfg.number("bounds.set_size", 1.0);
    p.validate();
    return p;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void cmd_mr_estimate(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto model = structural_from(cfg);
    const auto n = static_cast<std::size_t>(cfg.integer("mr.n", 10000));
    const int bins = static_cast<int>(cfg.integer("mr.bins", 8));
    const auto batch = mr::generate_samples(model, n, cli.seed);
    const auto st = mr::summary_stats(batch);
    const double theta = mr::estimate_theta(st);
    json intercept = nullptr;
    try {
        const auto fit = mr::estimate_theta_intercept(st);
        intercept = {{"theta0", fit.theta0}, {"theta", fit.theta}};
    } catch (const UnderdeterminedError&) {
    }
    const auto markov = mr::validate_markov_conditions(batch, bins);

    std::vector<std::vector<double>> rows;
    for (Eigen::Index j = 0; j < st.instruments(); ++j)
        rows.push_back({static_cast<double>(j), st.beta_hat_x(j), st.se_x(j), st.beta_hat_y(j), st.se_y(j)});
    art.csv("summary_stats.csv", {"instrument", "beta_hat_x", "se_x", "beta_hat_y", "se_y"}, rows);
    art.json_file("mr_estimate.json", {{"n", n},
                                       {"instruments", st.instruments()},
                                       {"theta_true", model.theta},
                                       {"theta_hat", theta},
                                       {"intercept_fit", intercept},
                                       {"markov",
                                        {{"independence", check_json(markov.independence)},
                                         {"exclusion", check_json(markov.exclusion)},
                                         {"relevance", check_json(markov.relevance)},
                                         {"all_pass", markov.all_pass()}}}});
    if (!cli.quiet) out << "theta_hat = " << algo::format_double(theta) << " (true " << model.theta << ")\n";
}

void cmd_mfg_solve(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto grid = grid_from(cfg);
    const auto problem = problem_from(cfg, grid, cli.seed);
    const auto res = mfg::picard_solve(grid, problem, picard_from(cfg));
    const auto& f = res.field;

    std::vector<std::vector<double>> rows;
    for (int n = 0; n < grid.nt; ++n)
        for (int i = 0; i < grid.nx; ++i) rows.push_back({grid.t(n), grid.x(i), f.u(n, i), f.m(n, i), f.theta(n, i)});
    art.csv("field.csv", {"t", "x", "u", "m", "theta"}, rows);
    rows.clear();
    for (int n = 0; n < grid.nt; ++n)
        rows.push_back({grid.t(n), f.theta_bar(n), mfg::density_mean(grid, row_vec(f.m, n))});
    art.csv("theta_bar.csv", {"t", "theta_bar", "density_mean"}, rows);
    rows.clear();
    for (std::size_t k = 0; k < res.residuals.size(); ++k) rows.push_back({static_cast<double>(k + 1), res.residuals[k]});
    art.csv("picard_residuals.csv", {"iteration", "residual"}, rows);
    art.finish({{"converged", res.converged}, {"iterations", res.iterations}});
    if (!cli.quiet)
        out << "picard " << (res.converged ? "converged" : "did not converge") << " after " << res.iterations
            << " iterations\n";
}

void cmd_outage(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto config = outage_from(cfg);
    const auto report = config.theta_prime ? outage::outage_probability(config, cli.seed)
                                           : outage::outage_probability(config, structural_from(cfg), cli.seed);
    art.json_file("outage.json", {{"estimate", report.estimate},
                                  {"stderr", report.std_error},
                                  {"samples", report.samples},
                                  {"threshold", report.threshold},
                                  {"theta_prime", report.theta_prime}});
    art.finish();
    if (!cli.quiet) out << "outage = " << algo::format_double(report.estimate) << " +- " << report.std_error << "\n";
}

void cmd_kl_ber(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto beams = beams_from(cfg);
    const auto reps = static_cast<std::size_t>(cfg.integer("kl.realizations", 2000));
    const auto samples = kl::irradiance_realizations(beams, reps, cli.seed);
    const kl::Quadrature ring{0.0, 2.0 * std::numbers::pi, kl::QuadratureRule::periodic};
    const auto basis = kl::kl_from_realizations(samples, ring);
    const auto trunc = static_cast<Eigen::Index>(cfg.integer("kl.trunc", basis.size()));

    std::vector<std::vector<double>> rows;
    for (Eigen::Index n = 0; n < basis.eigvals.size(); ++n) rows.push_back({static_cast<double>(n + 1), basis.eigvals(n)});
    art.csv("eigvals.csv", {"n", "lambda"}, rows);
    json sweep = json::array();
    for (double nv : cfg.numbers("kl.noise_var", {0.1, 1.0, 10.0})) {
        const auto r = kl::snr_ber(basis, nv, trunc);
        sweep.push_back({{"noise_var", nv}, {"avg_snr", r.avg_snr}, {"ber", r.ber}});
    }
    art.json_file("snr_ber.json", sweep);
    art.finish({{"trunc", trunc}, {"realizations", reps}});
    if (!cli.quiet) out << "leading eigenvalue " << algo::format_double(basis.eigvals(0)) << "\n";
}

void cmd_hawkes_sim(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto model = hawkes_from(cfg);
    const auto st = hawkes::simulate_hawkes(model, cli.seed);
    std::vector<std::pair<double, std::size_t>> merged;
    for (std::size_t j = 0; j < st.events.size(); ++j)
        for (double t : st.events[j]) merged.emplace_back(t, j);
    std::sort(merged.begin(), merged.end());
    std::vector<std::vector<double>> rows;
    for (const auto& [t, j] : merged) rows.push_back({static_cast<double>(j), t});
    art.csv("events.csv", {"dimension", "timestamp"}, rows);

    const auto comp = hawkes::compensator(model, st, model.horizon);
    json counts = json::array(), comps = json::array();
    for (std::size_t j = 0; j < st.events.size(); ++j) {
        counts.push_back(st.events[j].size());
        comps.push_back(comp(static_cast<Eigen::Index>(j)));
    }
    art.json_file("hawkes.json", {{"dims", model.dims()},
                                  {"horizon", model.horizon},
                                  {"spectral_radius", model.spectral_radius()},
                                  {"counts", counts},
                                  {"compensator_at_horizon", comps}});
    art.finish();
    if (!cli.quiet) out << st.total_events() << " events\n";
}

void cmd_adversary(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto model = hawkes_from(cfg);
    const auto mode = eve_mode(cfg.string("adversary.mode", "extinction"));
    auto adv = hawkes::make_adversary(model, cfg.number("adversary.r_conv", 1e-3));
    adv.region = lattice_from(cfg);
    if (mode == hawkes::EveMode::extinction) {
        adv.clusters = hawkes::simulate_clusters(model, derive_seed(cli.seed, kClusterSeed));
    } else {
        auto m = model;
        m.allow_nonstationary = true;
        adv.events = hawkes::simulate_hawkes(m, derive_seed(cli.seed, kEventSeed));
    }

    const auto grid = grid_from(cfg);
    const auto problem = problem_from(cfg, grid, cli.seed);
    const auto solved = mfg::picard_solve(grid, problem, picard_from(cfg));
    const double x0 = cfg.number("adversary.x0", mfg::density_mean(grid, problem.m0));
    const auto traj = hawkes::eve_control_law(grid, solved.field.theta, adv, problem.noise, mode, x0);

    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < traj.t.size(); ++n) rows.push_back({traj.t[n], traj.state[n], traj.drift[n]});
    art.csv("eve_trajectory.csv", {"t", "state", "drift"}, rows);
    const double outage_p = hawkes::secrecy_outage(adv);
    art.json_file("adversary.json", {{"m", adv.offspring_mean},
                                     {"q", adv.extinction_prob},
                                     {"secrecy_outage", outage_p},
                                     {"mode", eve_mode_name(mode)},
                                     {"supercritical", adv.offspring_mean > 1.0},
                                     {"volume_to_noise_ratio", hawkes::volume_to_noise_ratio(adv.region)},
                                     {"err_prob_bound", adv.region.err_prob}});
    art.finish();
    if (!cli.quiet)
        out << "m = " << adv.offspring_mean << ", q = " << algo::format_double(adv.extinction_prob)
            << ", secrecy outage = " << algo::format_double(outage_p) << "\n";
}

void cmd_bounds(const ConfigFile& cfg, const CliConfig& cli, Artifacts& art, std::ostream& out) {
    const auto params = bounds_from(cfg);
    const auto problem = algo::problem_from_string(cfg.string("bounds.problem", "P2"));
    const auto r = bounds::convergence_probability(params, problem);
    const auto az = bounds::azuma_bound(params, static_cast<std::size_t>(cfg.integer("bounds.steps", 10)));
    json report = {{"problem", algo::to_string(problem)},
                   {"a", r.a},
                   {"b", r.b},
                   {"c", r.c},
                   {"p1", r.p1},
                   {"p2", r.p2},
                   {"varrho", r.varrho},
                   {"complexity", r.complexity_infinite ? json(nullptr) : json(r.complexity)},
                   {"complexity_infinite", r.complexity_infinite},
                   {"clamped", {{"a", r.clamped.a}, {"b", r.clamped.b}, {"c", r.clamped.c}}},
                   {"azuma", {{"value", az.value}, {"raw", az.raw}, {"clamped", az.clamped}}},
                   {"sanov", bounds::sanov_bound(params)},
                   {"hoeffding_mgf", bounds::hoeffding_mgf_bound(params.theta_eve_minus, params.theta_eve_plus)}};
    art.json_file("bounds.json", report);

    const auto reps = static_cast<std::size_t>(cfg.integer("bounds.reps", 0));
    if (reps > 0) {
        auto algo_cfg = algorithm_from(cfg, cli.seed);
        const auto v = bounds::empirical_convergence_check(algo_cfg, params, reps);
        std::ofstream csv(art.path("validation.csv"), std::ios::binary | std::ios::trunc);
        if (!csv) throw IoError("cannot write validation.csv");
        csv << "config_hash,reps,frequency,bound,pass\n"
            << art.hash() << ',' << v.reps << ',' << algo::format_double(v.frequency) << ','
            << algo::format_double(v.bound) << ',' << (v.pass ? 1 : 0) << '\n';
    }
    art.finish();
    if (!cli.quiet) out << "p2 = " << algo::format_double(r.p2) << "\n";
}

int cmd_run_algo(const ConfigFile& cfg, const CliConfig& cli, std::ostream& out, std::ostream& err) {
    const auto config = algorithm_from(cfg, cli.seed);
    const auto result = algo::run_algorithm1(config);
    if (!result.records.empty()) algo::emit_run(config, result, cli.out_dir);
    if (!result.error.empty()) {
        err << "error: " << result.error << "\n";
        return kDomainError;
    }
    if (!cli.quiet)
        out << (result.converged ? "converged" : "not converged") << " after " << result.records.size()
            << " outer iterations, residual " << algo::format_double(result.records.back().residual) << "\n";
    return kOk;
}

void cmd_validate(const ConfigFile& cfg, const CliConfig& cli, std::ostream& out) {
    algorithm_from(cfg, cli.seed);
    hawkes_from(cfg).validate();
    lattice_from(cfg);
    structural_from(cfg);
    outage_from(cfg);
    beams_from(cfg);
    bounds_from(cfg);
    if (!cli.quiet) out << "config ok\n";
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"mr-estimate", "mfg-solve", "outage",   "kl-ber",  "hawkes-sim",
                                            "adversary",   "bounds",    "run-algo", "validate"};
    return c;
}

std::string usage() {
    std::string s = "usage: mfgsec <command> [--config FILE] [--seed N] [--out DIR] [--set key=value]... [--quiet]\n"
                    "commands:";
    for (const auto& c : commands()) s += " " + c;
    s += "\nexit codes: 0 success, 1 domain or config error, 2 usage error\n";
    return s;
}

int run_command(const CliConfig& config, std::ostream& out, std::ostream& err) {
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), config.command) == cmds.end()) {
        err << "unknown command '" << config.command << "'\n" << usage();
        return kUsageError;
    }
    for (const auto& o : config.overrides)
        if (o.find('=') == std::string::npos) {
            err << "--set expects key=value, got '" << o << "'\n" << usage();
            return kUsageError;
        }

    try {
        ConfigFile cfg = config.config_path.empty() ? ConfigFile{} : ConfigFile::load(config.config_path);
        for (const auto& o : config.overrides) cfg.apply_override(o);

        const auto& c = config.command;
        if (c == "validate") {
            cmd_validate(cfg, config, out);
            return kOk;
        }
        if (c == "run-algo") return cmd_run_algo(cfg, config, out, err);

        Artifacts art(config, cfg);
        if (c == "mr-estimate") {
            cmd_mr_estimate(cfg, config, art, out);
            art.finish();
        } else if (c == "mfg-solve") cmd_mfg_solve(cfg, config, art, out);
        else if (c == "outage") cmd_outage(cfg, config, art, out);
        else if (c == "kl-ber") cmd_kl_ber(cfg, config, art, out);
        else if (c == "hawkes-sim") cmd_hawkes_sim(cfg, config, art, out);
        else if (c == "adversary") cmd_adversary(cfg, config, art, out);
        else if (c == "bounds") cmd_bounds(cfg, config, art, out);
        return kOk;
    } catch (const ParseError& e) {
        err << "error: " << config.config_path.string() << ": " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kDomainError;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Secure mean-field-game toolkit", "mfgsec"};
    CliConfig cfg;
    std::string config_path, out_dir = cfg.out_dir.string();
    app.add_option("command", cfg.command, "one of the commands below")->required();
    app.add_option("-c,--config", config_path, "config file");
    app.add_option("-s,--seed", cfg.seed, "master seed");
    app.add_option("-o,--out", out_dir, "output directory");
    app.add_option("--set", cfg.overrides, "override key=value (repeatable)");
    app.add_flag("-q,--quiet", cfg.quiet, "suppress the summary line");
    app.footer(usage());
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << usage();
        return kUsageError;
    }
    cfg.config_path = config_path;
    cfg.out_dir = out_dir;
    return run_command(cfg, out, err);
}

}  // namespace mfgsec::cli
