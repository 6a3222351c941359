#include "lab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lab/error.hpp"

namespace lab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(int line, const std::string& what) {
    throw ConfigError("config line " + std::to_string(line) + ": " + what);
}

// Strips a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

std::string unquote(const std::string& v, int line) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        const auto in = v.substr(1, v.size() - 2);
        if (in.find('"') != std::string::npos) fail_at(line, "stray quote in string");
        return in;
    }
    if (v.find('"') != std::string::npos) fail_at(line, "unbalanced quote");
    return v;
}

struct Reader {
    const ConfigMap& map;
    std::map<std::string, bool> used;

    const ConfigValue* find(const std::string& key) {
        const auto it = map.find(key);
        if (it == map.end()) return nullptr;
        used[key] = true;
        return &it->second;
    }
    static double to_double(const std::string& s, const std::string& key, int line) {
        double v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) fail_at(line, key + " expects a number, got '" + s + "'");
        return v;
    }
    static std::uint64_t to_u64(const std::string& s, const std::string& key, int line) {
        std::uint64_t v = 0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size())
            fail_at(line, key + " expects a nonnegative integer, got '" + s + "'");
        return v;
    }
    const std::string& scalar(const ConfigValue& v, const std::string& key) {
        if (v.list || v.items.size() != 1) fail_at(v.line, key + " expects a single value");
        return v.items[0];
    }
    void num(const std::string& key, double& out) {
        if (const auto* v = find(key)) out = to_double(scalar(*v, key), key, v->line);
    }
    template <class U>
    void uint(const std::string& key, U& out) {
        if (const auto* v = find(key)) out = U(to_u64(scalar(*v, key), key, v->line));
    }
    void str(const std::string& key, std::string& out) {
        if (const auto* v = find(key)) out = scalar(*v, key);
    }
    void nums(const std::string& key, std::vector<double>& out) {
        if (const auto* v = find(key)) {
            out.clear();
            for (const auto& s : v->items) out.push_back(to_double(s, key, v->line));
        }
    }
    int line(const std::string& key) const {
        const auto it = map.find(key);
        return it == map.end() ? 0 : it->second.line;
    }
};

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
    return s + "]";
}

const char* init_name(InitKind k) {
    switch (k) {
        case InitKind::stationary: return "stationary";
        case InitKind::point: return "point";
        case InitKind::smoothed: return "smoothed";
    }
    return "stationary";
}

const char* potential_name(PotentialKind k) {
    switch (k) {
        case PotentialKind::zero: return "zero";
        case PotentialKind::cosine: return "cosine";
        case PotentialKind::quadratic: return "quadratic";
    }
    return "zero";
}

const char* solver_name(SolverChoice s) {
    switch (s) {
        case SolverChoice::automatic: return "auto";
        case SolverChoice::exact: return "exact";
        case SolverChoice::sinkhorn: return "sinkhorn";
    }
    return "auto";
}

std::string canonical(const ExperimentConfig& c, bool run_settings) {
    std::ostringstream o;
    o << "[space]\n";
    o << "kind = \"" << (c.space == SpaceKind::torus ? "torus" : "interval") << "\"\n";
    o << "dim = " << c.dim << "\n";
    o << "drift = " << list(c.drift) << "\n";
    o << "potential = \"" << potential_name(c.potential.kind) << "\"\n";
    o << "potential_a = " << format_double(c.potential.a) << "\n";
    o << "\n[sde]\n";
    o << "h = " << format_double(c.h) << "\n";
    o << "stride = " << c.stride << "\n";
    o << "substeps = " << c.substeps << "\n";
    o << "init = \"" << init_name(c.init.kind) << "\"\n";
    o << "x0 = " << list(c.init.x0) << "\n";
    o << "r = " << format_double(c.init.r) << "\n";
    o << "\n[experiment]\n";
    o << "T = " << list(c.T_list) << "\n";
    o << "replicas = " << c.replicas << "\n";
    o << "seed = " << c.seed << "\n";
    o << "p = " << list(c.p_list) << "\n";
    o << "q = " << format_double(c.q) << "\n";
    o << "zeta = " << format_double(c.zeta) << "\n";
    o << "bootstrap = " << c.bootstrap << "\n";
    std::vector<double> modes;
    for (std::size_t i : c.modes) modes.push_back(double(i + 1));
    o << "modes = " << list(modes) << "  # 1-based\n";
    o << "g_scale = " << format_double(c.g_scale) << "\n";
    o << "r_shift = " << format_double(c.r_shift) << "\n";
    o << "xi_draws = " << c.xi_draws << "\n";
    o << "xi_points = " << c.xi_points << "\n";
    o << "x_lo = " << format_double(c.x_lo) << "\n";
    o << "x_hi = " << format_double(c.x_hi) << "\n";
    o << "theta = " << list(c.theta_list) << "\n";
    o << "nu = \"" << c.nu << "\"\n";
    o << "\n[spectral]\n";
    o << "modes = " << c.basis_modes << "  # 0: default truncation\n";
    o << "\n[wasserstein]\n";
    o << "grid_m = " << c.grid_m << "  # 0: default resolution\n";
    o << "solver = \"" << solver_name(c.solver) << "\"\n";
    o << "sinkhorn_eps_factor = " << format_double(c.sinkhorn_eps_factor) << "\n";
    if (run_settings) {
        o << "\n[run]\n";
        o << "threads = " << c.threads << "  # 0: LAB_THREADS or hardware\n";
        o << "\n[output]\n";
        o << "dir = \"" << c.out_dir << "\"\n";
    }
    return o.str();
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
    ConfigMap out;
    std::istringstream in(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') fail_at(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty() || section.find_first_of(" .[]=") != std::string::npos)
                fail_at(line, "bad section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) fail_at(line, "expected key = value");
        const auto key = trim(s.substr(0, eq));
        auto val = trim(s.substr(eq + 1));
        if (key.empty() || key.find_first_of(" .[]\"") != std::string::npos) fail_at(line, "bad key");
        if (val.empty()) fail_at(line, "missing value for " + key);
        const auto full = section.empty() ? key : section + "." + key;
        if (out.count(full)) fail_at(line, "duplicate key " + full);
        ConfigValue v;
        v.line = line;
        if (val.front() == '[') {
            if (val.back() != ']') fail_at(line, "unterminated list");
            v.list = true;
            const auto body = trim(val.substr(1, val.size() - 2));
            if (!body.empty()) {
                std::size_t start = 0;
                while (true) {
                    const auto comma = body.find(',', start);
                    const auto item = trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
                    if (item.empty()) fail_at(line, "empty list item");
                    v.items.push_back(unquote(item, line));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            }
        } else {
            v.items.push_back(unquote(val, line));
        }
        out[full] = std::move(v);
    }
    return out;
}

ExperimentConfig default_config(const std::string& command) {
    ExperimentConfig c;
    if (command == "limit") {
        c.T_list = {100, 200, 400};
        c.replicas = 400;
    } else if (command == "bernstein") {
        c.T_list = {50};
        c.replicas = 10000;
    } else if (command == "psi-moments") {
        c.T_list = {100, 200};
        c.replicas = 2000;
    } else if (command == "simulate") {
        c.T_list = {10};
        c.replicas = 2;
    }
    return c;
}

ExperimentConfig apply_config(const ConfigMap& entries, ExperimentConfig c) {
    Reader r{entries, {}};
    std::string s;
    s = c.space == SpaceKind::torus ? "torus" : "interval";
    r.str("space.kind", s);
    if (s == "torus") c.space = SpaceKind::torus;
    else if (s == "interval") c.space = SpaceKind::interval;
    else fail_at(r.line("space.kind"), "space.kind must be torus or interval");
    double dim = c.dim;
    r.num("space.dim", dim);
    if (dim != double(int(dim))) fail_at(r.line("space.dim"), "space.dim must be an integer");
    c.dim = int(dim);
    r.nums("space.drift", c.drift);
    s = potential_name(c.potential.kind);
    r.str("space.potential", s);
    if (s == "zero") c.potential.kind = PotentialKind::zero;
    else if (s == "cosine") c.potential.kind = PotentialKind::cosine;
    else if (s == "quadratic") c.potential.kind = PotentialKind::quadratic;
    else fail_at(r.line("space.potential"), "space.potential must be zero, cosine or quadratic");
    r.num("space.potential_a", c.potential.a);

    r.num("sde.h", c.h);
    r.uint("sde.stride", c.stride);
    r.uint("sde.substeps", c.substeps);
    s = init_name(c.init.kind);
    r.str("sde.init", s);
    if (s == "stationary") c.init.kind = InitKind::stationary;
    else if (s == "point") c.init.kind = InitKind::point;
    else if (s == "smoothed") c.init.kind = InitKind::smoothed;
    else fail_at(r.line("sde.init"), "sde.init must be stationary, point or smoothed");
    r.nums("sde.x0", c.init.x0);
    r.num("sde.r", c.init.r);

    r.nums("experiment.T", c.T_list);
    r.uint("experiment.replicas", c.replicas);
    r.uint("experiment.seed", c.seed);
    r.nums("experiment.p", c.p_list);
    r.num("experiment.q", c.q);
    r.num("experiment.zeta", c.zeta);
    r.uint("experiment.bootstrap", c.bootstrap);
    if (const auto* v = r.find("experiment.modes")) {
        c.modes.clear();
        for (const auto& it : v->items) {
            const auto m = Reader::to_u64(it, "experiment.modes", v->line);
            if (m < 1) fail_at(v->line, "experiment.modes are 1-based");
            c.modes.push_back(std::size_t(m - 1));
        }
    }
    r.num("experiment.g_scale", c.g_scale);
    r.num("experiment.r_shift", c.r_shift);
    r.uint("experiment.xi_draws", c.xi_draws);
    r.uint("experiment.xi_points", c.xi_points);
    r.num("experiment.x_lo", c.x_lo);
    r.num("experiment.x_hi", c.x_hi);
    r.nums("experiment.theta", c.theta_list);
    r.str("experiment.nu", c.nu);

    r.uint("spectral.modes", c.basis_modes);
    r.uint("wasserstein.grid_m", c.grid_m);
    s = solver_name(c.solver);
    r.str("wasserstein.solver", s);
    if (s == "auto") c.solver = SolverChoice::automatic;
    else if (s == "exact") c.solver = SolverChoice::exact;
    else if (s == "sinkhorn") c.solver = SolverChoice::sinkhorn;
    else fail_at(r.line("wasserstein.solver"), "wasserstein.solver must be auto, exact or sinkhorn");
    r.num("wasserstein.sinkhorn_eps_factor", c.sinkhorn_eps_factor);
    double threads = c.threads;
    r.num("run.threads", threads);
    c.threads = int(threads);
    r.str("output.dir", c.out_dir);

    for (const auto& [key, v] : entries)
        if (!r.used.count(key)) fail_at(v.line, "unknown key " + key);
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& command) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "' (--config)");
    std::ostringstream ss;
    ss << in.rdbuf();
    return apply_config(parse_config_text(ss.str()), default_config(command));
}

std::string print_config(const ExperimentConfig& cfg) { return canonical(cfg, true); }

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : canonical(cfg, false)) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace lab
