#include "bsvie/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace bsvie {

namespace {

const std::set<std::string> kKnownKeys = {
    "horizon",       "grid.n",          "measure.kind",  "measure.u0",      "measure.atoms",
    "measure.mixture", "kernel.name",   "kernel.c",      "kernel.coef",     "kernel.power",
    "kernel.rate",   "kernel.file",     "kernel.g",      "terminal.kind",   "terminal.f0",
    "terminal.phi",  "terminal.h",      "mc.paths",      "mc.seed",         "mc.law",
    "tol.resolvent", "tol.picard",      "tol.quad_slack", "picard.max_iterations", "picard.guard",
    "lsmc.degree",   "beta",            "output.dir",    "name",
};

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front())
        out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) parts.push_back(trim(cur));
    return parts;
}

double to_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, what + ": not a finite number: '" + text + "'");
    }
}

std::vector<double> numbers(const std::vector<std::string>& parts, std::size_t from, const std::string& what) {
    std::vector<double> out;
    for (std::size_t k = from; k < parts.size(); ++k) out.push_back(to_number(parts[k], what));
    return out;
}

void expect_arity(const std::vector<double>& args, std::size_t n, const std::string& spec) {
    if (args.size() != n) throw Error(ErrorKind::Config, "wrong number of parameters in '" + spec + "'");
}

}  // namespace

TimeFunction parse_time_function(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw Error(ErrorKind::Config, "empty time function");
    const auto args = numbers(parts, 1, spec);
    if (parts[0] == "const") {
        expect_arity(args, 1, spec);
        return functions::constant(args[0]);
    }
    if (parts[0] == "exp") {
        expect_arity(args, 2, spec);
        return functions::exponential(args[0], args[1]);
    }
    if (parts[0] == "affine") {
        expect_arity(args, 2, spec);
        return functions::affine(args[0], args[1]);
    }
    throw Error(ErrorKind::Config, "unknown time function '" + parts[0] + "'");
}

LagKernel parse_lag_kernel(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw Error(ErrorKind::Config, "empty lag kernel");
    const auto args = numbers(parts, 1, spec);
    if (parts[0] == "const") {
        expect_arity(args, 1, spec);
        return functions::lag_constant(args[0]);
    }
    if (parts[0] == "exp") {
        expect_arity(args, 2, spec);
        return functions::lag_exponential(args[0], args[1]);
    }
    throw Error(ErrorKind::Config, "unknown lag kernel '" + parts[0] + "'");
}

StateFunction parse_state_function(const std::string& spec) {
    const auto parts = split(spec, ':');
    if (parts.empty()) throw Error(ErrorKind::Config, "empty state function");
    const auto args = numbers(parts, 1, spec);
    if (parts[0] == "poly") {
        if (args.empty()) throw Error(ErrorKind::Config, "poly needs coefficients");
        return functions::polynomial(args);
    }
    if (parts[0] == "exp") {
        expect_arity(args, 2, spec);
        return functions::state_exponential(args[0], args[1]);
    }
    if (parts[0] == "affine") {
        expect_arity(args, 2, spec);
        return functions::state_affine(args[0], args[1]);
    }
    throw Error(ErrorKind::Config, "unknown state function '" + parts[0] + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
    ExperimentConfig cfg;
    cfg.base_dir_ = base_dir;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!kKnownKeys.count(key)) throw Error(ErrorKind::Config, "unknown key '" + key + "'");
        cfg.entries_[key] = value;
    }
    cfg.interpret();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot read config " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path.parent_path());
}

std::string ExperimentConfig::get(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

double ExperimentConfig::number(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : to_number(it->second, key);
}

void ExperimentConfig::interpret() {
    horizon_ = number("horizon", 1.0);
    if (!(horizon_ > 0.0)) throw Error(ErrorKind::Config, "horizon must be positive");
    const double n = number("grid.n", 100);
    if (n < 2 || n != std::floor(n)) throw Error(ErrorKind::Config, "grid.n must be an integer >= 2");
    intervals_ = static_cast<std::size_t>(n);
    const double m = number("mc.paths", 10000);
    if (m < 1 || m != std::floor(m)) throw Error(ErrorKind::Config, "mc.paths must be an integer >= 1");
    paths_ = static_cast<std::size_t>(m);
    const std::string seed = get("mc.seed", "20240601");
    try {
        std::size_t used = 0;
        seed_ = std::stoull(seed, &used);
        if (used != seed.size()) throw std::invalid_argument(seed);
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "mc.seed must be an unsigned integer");
    }
    const std::string law = get("mc.law", "q");
    if (law != "p" && law != "q") throw Error(ErrorKind::Config, "mc.law must be p or q");
    law_ = law == "p" ? Law::P : Law::Q;
    resolvent_tol_ = number("tol.resolvent", 1e-10);
    if (!(resolvent_tol_ > 0.0)) throw Error(ErrorKind::Config, "tol.resolvent must be positive");
    picard_.tolerance = number("tol.picard", 1e-10);
    if (!(picard_.tolerance > 0.0)) throw Error(ErrorKind::Config, "tol.picard must be positive");
    const double iters = number("picard.max_iterations", 200);
    if (iters < 1) throw Error(ErrorKind::Config, "picard.max_iterations must be >= 1");
    picard_.max_iterations = static_cast<std::size_t>(iters);
    picard_.divergence_guard = number("picard.guard", 1e12);
    lsmc_degree_ = static_cast<int>(number("lsmc.degree", 4));
    quad_slack_ = number("tol.quad_slack", 10.0);
    beta_ = number("beta", 0.0);
    output_dir_ = get("output.dir", "out");

    // Resolve every cross-reference now so bad configs fail with exit code 2.
    measure().require_valid();
    (void)kernel();
    (void)terminal();
    (void)lsmc();
}

LsmcConfig ExperimentConfig::lsmc() const {
    if (lsmc_degree_ < 0 || lsmc_degree_ > 4) throw Error(ErrorKind::Config, "lsmc.degree must be in 0..4");
    LsmcConfig c;
    c.picard.max_iterations = picard_.max_iterations;
    c.picard.divergence_guard = picard_.divergence_guard;
    c.picard.tolerance = std::max(picard_.tolerance, 1e-8);
    c.degree = lsmc_degree_;
    return c;
}

DelayMeasure ExperimentConfig::measure() const {
    const std::string kind = get("measure.kind", "dirac");
    if (kind == "dirac") return DelayMeasure::dirac(horizon_, number("measure.u0", 0.0));
    if (kind == "uniform") return DelayMeasure::uniform(horizon_);
    if (kind == "atoms") {
        std::vector<DelayMeasure::Atom> atoms;
        for (const auto& item : split(get("measure.atoms"), ',')) {
            const auto uw = split(item, ':');
            if (uw.size() != 2) throw Error(ErrorKind::Config, "measure.atoms entries are u:w");
            atoms.push_back({to_number(uw[0], "measure.atoms"), to_number(uw[1], "measure.atoms")});
        }
        if (atoms.empty()) throw Error(ErrorKind::Config, "measure.atoms is empty");
        return DelayMeasure::atoms(horizon_, std::move(atoms));
    }
    if (kind == "mixture") {
        std::vector<DelayMeasure::Component> parts;
        for (const auto& item : split(get("measure.mixture"), ',')) {
            const auto kw = split(item, ':');
            if (kw.size() != 2) throw Error(ErrorKind::Config, "measure.mixture entries are kind[@u0]:weight");
            const double w = to_number(kw[1], "measure.mixture");
            if (kw[0] == "uniform") {
                parts.push_back({std::make_shared<DelayMeasure>(DelayMeasure::uniform(horizon_)), w});
            } else if (kw[0].rfind("dirac@", 0) == 0) {
                const double u0 = to_number(kw[0].substr(6), "measure.mixture");
                parts.push_back({std::make_shared<DelayMeasure>(DelayMeasure::dirac(horizon_, u0)), w});
            } else {
                throw Error(ErrorKind::Config, "unknown mixture component '" + kw[0] + "'");
            }
        }
        if (parts.empty()) throw Error(ErrorKind::Config, "measure.mixture is empty");
        return DelayMeasure::mixture(horizon_, std::move(parts));
    }
    throw Error(ErrorKind::Config, "unknown measure.kind '" + kind + "'");
}

KernelSpec ExperimentConfig::kernel() const {
    const std::string name = get("kernel.name", "constant");
    KernelSpec spec;
    if (name == "constant") {
        spec.G = kernels::constant(number("kernel.c", 0.0));
    } else if (name == "zero") {
        spec.G = kernels::constant(0.0);
    } else if (name == "poly_exp") {
        const double power = number("kernel.power", 1);
        if (power < 0 || power != std::floor(power)) throw Error(ErrorKind::Config, "kernel.power must be >= 0");
        spec.G = kernels::poly_exp(number("kernel.coef", 1.0), static_cast<int>(power), number("kernel.rate", 1.0),
                                   horizon_);
    } else if (name == "example33") {
        spec = kernels::example33(horizon_);
    } else if (name == "tabulated") {
        const std::filesystem::path file = base_dir_ / get("kernel.file");
        std::ifstream in(file);
        if (!in) throw Error(ErrorKind::Config, "cannot read kernel.file " + file.string());
        std::vector<double> values;
        std::string tok;
        while (in >> tok) values.push_back(to_number(tok, "kernel.file"));
        spec.G = kernels::tabulated(grid(), std::move(values));
    } else {
        throw Error(ErrorKind::Config, "unknown kernel.name '" + name + "'");
    }
    spec.g = kernels::constant_1d(number("kernel.g", 0.0));
    return spec;
}

TerminalFamily ExperimentConfig::terminal() const {
    const std::string kind = get("terminal.kind", "deterministic");
    if (kind == "deterministic") return TerminalFamily::deterministic(parse_time_function(get("terminal.f0", "const:1")));
    if (kind == "gaussian_linear")
        return TerminalFamily::gaussian_linear(parse_time_function(get("terminal.f0", "const:0")),
                                               parse_lag_kernel(get("terminal.phi", "const:1")));
    if (kind == "terminal_function")
        return TerminalFamily::terminal_function(parse_state_function(get("terminal.h", "poly:0:0:1")));
    throw Error(ErrorKind::Config, "unknown terminal.kind '" + kind + "'");
}

std::string ExperimentConfig::hash() const {
    std::uint64_t h = 14695981039346656037ull;
    for (const auto& [k, v] : entries_) {
        for (char c : k + "=" + v + "\n") {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace bsvie
