#include "heis/cli_io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "heis/exact.hpp"

namespace heis {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- config parsing ----

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown key \"" + k + "\"");
}

template <class T>
T get_or(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

DomainSpec domain_from_json(const json& j, const std::string& where) {
    check_keys(j, where, {"kind", "center", "R", "a", "dilation"});
    DomainSpec d;
    d.kind = get_or<std::string>(j, "kind", where, d.kind);
    if (d.kind != "gauge_ball" && d.kind != "anisotropic_gauge" && d.kind != "euclidean_ball")
        throw ConfigError(where + ": unknown domain kind \"" + d.kind + "\"");
    d.center = get_or<std::vector<double>>(j, "center", where, {});
    d.R = get_or<double>(j, "R", where, d.R);
    d.a = get_or<double>(j, "a", where, d.a);
    d.dilation = get_or<double>(j, "dilation", where, 0.0);
    if (!(d.R > 0.0)) throw ConfigError(where + ".R must be positive");
    if (!(d.a > 0.0)) throw ConfigError(where + ".a must be positive");
    return d;
}

json domain_to_json(const DomainSpec& d) {
    json j;
    j["kind"] = d.kind;
    j["R"] = d.R;
    j["dilation"] = d.dilation;
    if (d.kind == "anisotropic_gauge")
        j["a"] = d.a;
    else
        j["center"] = d.center;
    return j;
}

json solver_to_json(const SolveOptions& o) {
    return json{{"tolerance", o.tolerance},
                {"eps_schedule", o.eps_schedule},
                {"max_iterations", o.max_iterations},
                {"method", to_string(o.method)},
                {"linear_rtol", o.linear_rtol},
                {"max_linear_iterations", o.max_linear_iterations},
                {"snap_fraction", o.snap_fraction},
                {"inner_value", o.inner_value},
                {"outer_value", o.outer_value},
                {"threads", o.threads}};
}

SolveOptions solver_from_json(const json& j) {
    const std::string w = "solver";
    check_keys(j, w,
               {"tolerance", "eps_schedule", "max_iterations", "method", "linear_rtol", "max_linear_iterations",
                "snap_fraction", "inner_value", "outer_value", "threads"});
    SolveOptions o;
    o.tolerance = get_or(j, "tolerance", w, o.tolerance);
    o.eps_schedule = get_or(j, "eps_schedule", w, o.eps_schedule);
    o.max_iterations = get_or(j, "max_iterations", w, o.max_iterations);
    try {
        o.method = nonlinear_method_from_string(get_or<std::string>(j, "method", w, to_string(o.method)));
    } catch (const Error& e) {
        throw ConfigError(std::string("solver.method: ") + e.what());
    }
    o.linear_rtol = get_or(j, "linear_rtol", w, o.linear_rtol);
    o.max_linear_iterations = get_or(j, "max_linear_iterations", w, o.max_linear_iterations);
    o.snap_fraction = get_or(j, "snap_fraction", w, o.snap_fraction);
    o.inner_value = get_or(j, "inner_value", w, o.inner_value);
    o.outer_value = get_or(j, "outer_value", w, o.outer_value);
    o.threads = get_or(j, "threads", w, o.threads);
    if (!(o.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
    if (o.max_iterations < 1) throw ConfigError("solver.max_iterations must be >= 1");
    if (o.threads < 1) throw ConfigError("solver.threads must be >= 1");
    for (double e : o.eps_schedule)
        if (!(e > 0.0)) throw ConfigError("solver.eps_schedule entries must be positive");
    return o;
}

json config_to_json(const RunConfig& c) {
    json j;
    j["n"] = c.n;
    j["p"] = c.p;
    j["inner"] = domain_to_json(c.inner);
    j["outer"] = domain_to_json(c.outer);
    j["grid"] = json{{"resolution", c.resolution}};
    j["oracle"] = json{{"resolutions", c.oracle_resolutions}};
    j["sweep"] = json{{"p_values", c.sweep_p}};
    j["solver"] = solver_to_json(c.solver);
    j["verify"] = json{{"m", c.verify.m}, {"levels", c.verify.levels}, {"lambdas", c.verify.lambdas}};
    j["domain_check"] = json{{"samples", c.domain_check.samples}, {"probe_radii", c.domain_check.probe_radii}};
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    j["record_timing"] = c.record_timing;
    return j;
}

std::string fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json point_json(const Point& z) {
    const auto c = z.coords();
    return json(std::vector<double>(c.begin(), c.end()));
}

json report_json(const SolveReport& r, bool timing) {
    json stages = json::array();
    for (const auto& s : r.stages) stages.push_back({{"eps", s.eps}, {"iterations", s.iterations}, {"residual", s.residual}});
    return json{{"converged", r.converged},
                {"iterations", r.iterations},
                {"final_energy", r.final_energy},
                {"final_residual", r.final_residual},
                {"eps_schedule", r.eps_schedule},
                {"wall_time_s", timing ? r.wall_time : 0.0},
                {"stages", stages},
                {"energy_history", r.energy_history},
                {"stage_starts", r.stage_starts},
                {"linear_iterations", r.linear_iterations},
                {"picard_fallbacks", r.picard_fallbacks},
                {"dofs", r.dofs},
                {"snapped_nodes", r.snapped_nodes},
                {"elements", r.elements},
                {"min_free", r.min_free},
                {"max_free", r.max_free},
                {"bounds_ok", r.bounds_ok},
                {"message", r.message}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw Error("write failed for " + path.string());
}

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

fs::path ensure_dir(const std::string& dir) {
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw Error("cannot create " + dir + ": " + ec.message());
    return p;
}

std::string format_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool is_origin_gauge_ball(const DomainSpec& d) {
    if (d.kind != "gauge_ball") return false;
    for (double x : d.center)
        if (x != 0.0) return false;
    return true;
}

}  // namespace

// ---- config ----

ImplicitDomain make_domain(const DomainSpec& spec, int n) {
    Point center(n);
    if (!spec.center.empty()) {
        if (static_cast<int>(spec.center.size()) != 2 * n + 1)
            throw ConfigError("domain center must have " + std::to_string(2 * n + 1) + " coordinates");
        center = Point::from_coords(n, spec.center);
    }
    ImplicitDomain d = spec.kind == "gauge_ball"          ? make_gauge_ball(center, spec.R)
                       : spec.kind == "anisotropic_gauge" ? make_anisotropic_gauge(spec.a, spec.R, n)
                       : spec.kind == "euclidean_ball"    ? make_euclidean_ball(center, spec.R)
                                                          : throw ConfigError("unknown domain kind " + spec.kind);
    return spec.dilation != 0.0 ? dilate_domain(d, spec.dilation) : d;
}

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    check_keys(j, "config",
               {"n", "p", "inner", "outer", "grid", "oracle", "sweep", "solver", "verify", "domain_check",
                "output_dir", "seed", "record_timing"});
    RunConfig c;
    const std::string w = "config";
    c.n = get_or(j, "n", w, c.n);
    c.p = get_or(j, "p", w, c.p);
    if (c.n < 1) throw ConfigError("n must be >= 1");
    if (!(c.p > 1.0)) throw ConfigError("p must exceed 1");
    if (!j.contains("inner") || !j.contains("outer")) throw ConfigError("config needs inner and outer domains");
    c.inner = domain_from_json(j["inner"], "inner");
    c.outer = domain_from_json(j["outer"], "outer");
    if (j.contains("grid")) {
        check_keys(j["grid"], "grid", {"resolution"});
        const json& r = j["grid"].value("resolution", json(c.resolution));
        try {
            if (r.is_number_integer())
                c.resolution.fill(r.get<int>());
            else
                c.resolution = r.get<std::array<int, 3>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("grid.resolution: ") + e.what());
        }
    }
    for (int r : c.resolution)
        if (r < kMinResolution) throw ConfigError("grid.resolution must be >= " + std::to_string(kMinResolution));
    if (j.contains("oracle")) {
        check_keys(j["oracle"], "oracle", {"resolutions"});
        c.oracle_resolutions = get_or(j["oracle"], "resolutions", "oracle", c.oracle_resolutions);
        for (int r : c.oracle_resolutions)
            if (r < kMinResolution) throw ConfigError("oracle.resolutions entries must be >= 17");
    }
    if (j.contains("sweep")) {
        check_keys(j["sweep"], "sweep", {"p_values"});
        c.sweep_p = get_or(j["sweep"], "p_values", "sweep", c.sweep_p);
        for (double p : c.sweep_p)
            if (!(p > 1.0)) throw ConfigError("sweep.p_values entries must exceed 1");
    }
    if (j.contains("solver")) c.solver = solver_from_json(j["solver"]);
    if (j.contains("verify")) {
        check_keys(j["verify"], "verify", {"m", "levels", "lambdas"});
        c.verify.m = get_or(j["verify"], "m", "verify", c.verify.m);
        c.verify.levels = get_or(j["verify"], "levels", "verify", c.verify.levels);
        c.verify.lambdas = get_or(j["verify"], "lambdas", "verify", c.verify.lambdas);
        if (c.verify.m < 1) throw ConfigError("verify.m must be >= 1");
        for (double t : c.verify.levels)
            if (!(t > 0.0 && t < 1.0)) throw ConfigError("verify.levels entries must lie in (0, 1)");
        for (double l : c.verify.lambdas)
            if (!(l > 0.0)) throw ConfigError("verify.lambdas entries must be positive");
    }
    if (j.contains("domain_check")) {
        check_keys(j["domain_check"], "domain_check", {"samples", "probe_radii"});
        c.domain_check.samples = get_or(j["domain_check"], "samples", "domain_check", c.domain_check.samples);
        c.domain_check.probe_radii =
            get_or(j["domain_check"], "probe_radii", "domain_check", c.domain_check.probe_radii);
        if (c.domain_check.samples < 4) throw ConfigError("domain_check.samples must be >= 4");
        for (double r : c.domain_check.probe_radii)
            if (!(r > 0.0)) throw ConfigError("domain_check.probe_radii entries must be positive");
    }
    c.output_dir = get_or(j, "output_dir", w, c.output_dir);
    c.seed = get_or(j, "seed", w, c.seed);
    c.record_timing = get_or(j, "record_timing", w, c.record_timing);
    for (const auto* d : {&c.inner, &c.outer})
        if (!d->center.empty() && static_cast<int>(d->center.size()) != 2 * c.n + 1)
            throw ConfigError("domain center must have 2n+1 coordinates");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return config_from_json_text(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string config_to_json_text(const RunConfig& c) { return config_to_json(c).dump(2) + "\n"; }

std::string config_hash(const RunConfig& c) {
    json j = config_to_json(c);
    j.erase("output_dir");
    j["solver"].erase("threads");
    return fnv1a(j.dump());
}

std::string field_hash(const RunConfig& c) {
    json j = config_to_json(c);
    json f{{"n", j["n"]}, {"p", j["p"]}, {"inner", j["inner"]}, {"outer", j["outer"]}, {"grid", j["grid"]},
           {"solver", j["solver"]}};
    f["solver"].erase("threads");
    return fnv1a(f.dump());
}

AnnulusProblem make_problem(const RunConfig& c) { return make_problem(c, c.p); }

AnnulusProblem make_problem(const RunConfig& c, double p) {
    AmbientParams params(c.n);
    try {
        return AnnulusProblem(make_domain(c.inner, c.n), make_domain(c.outer, c.n), PExponent(p, params), params);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

// ---- checkpoints ----

std::string mask_rle(const RegionMask& mask) {
    std::string out;
    const auto& l = mask.labels;
    for (std::size_t i = 0; i < l.size();) {
        std::size_t j = i;
        while (j < l.size() && l[j] == l[i]) ++j;
        out += l[i] == Region::Inner ? 'I' : l[i] == Region::Free ? 'F' : 'O';
        out += std::to_string(j - i);
        i = j;
    }
    return out;
}

RegionMask mask_from_rle(const std::string& rle, std::size_t count) {
    RegionMask m;
    m.labels.reserve(count);
    for (std::size_t i = 0; i < rle.size();) {
        const char c = rle[i++];
        Region r;
        switch (c) {
            case 'I': r = Region::Inner; break;
            case 'F': r = Region::Free; break;
            case 'O': r = Region::Outer; break;
            default: throw ConfigError(std::string("bad mask label '") + c + "'");
        }
        std::size_t j = i;
        while (j < rle.size() && std::isdigit(static_cast<unsigned char>(rle[j]))) ++j;
        if (j == i) throw ConfigError("mask run without a length");
        const std::size_t len = std::stoull(rle.substr(i, j - i));
        if (m.labels.size() + len > count) throw ConfigError("mask runs exceed node count");
        m.labels.insert(m.labels.end(), len, r);
        i = j;
    }
    if (m.labels.size() != count) throw ConfigError("mask runs do not cover the grid");
    return m;
}

void write_checkpoint(const std::string& stem, const ScalarField& field, const RunConfig& c,
                      const SolveReport& report) {
    const std::string bin = stem + ".bin";
    {
        std::ofstream os(bin, std::ios::binary);
        if (!os) throw Error("cannot write " + bin);
        static_assert(sizeof(double) == 8);
        std::vector<unsigned char> bytes(8 * field.values.size());
        for (std::size_t i = 0; i < field.values.size(); ++i) {
            std::uint64_t u;
            std::memcpy(&u, &field.values[i], 8);
            for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<unsigned char>(u >> (8 * b));
        }
        os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw Error("write failed for " + bin);
    }
    json cfg = config_to_json(c);
    json j{{"format", "heis-field"},
           {"version", 1},
           {"data_file", fs::path(bin).filename().string()},
           {"dtype", "float64"},
           {"byte_order", "little"},
           {"order", "x-fastest"},
           {"resolution", field.grid.res()},
           {"box", json{{"lo", field.grid.lo()}, {"hi", field.grid.hi()}}},
           {"mask_rle", mask_rle(field.mask)},
           {"problem", json{{"n", cfg["n"]}, {"p", cfg["p"]}, {"inner", cfg["inner"]}, {"outer", cfg["outer"]}}},
           {"solver", cfg["solver"]},
           {"report", report_json(report, c.record_timing)},
           {"config_hash", config_hash(c)},
           {"field_hash", field_hash(c)}};
    write_json(stem + ".json", j);
}

Checkpoint read_checkpoint(const std::string& path) {
    fs::path p(path);
    fs::path side = p;
    if (p.extension() == ".bin") side.replace_extension(".json");
    const json j = read_json_file(side.string());
    Checkpoint ck;
    try {
        if (j.at("format") != "heis-field" || j.at("version") != 1) throw ConfigError("not a field checkpoint");
        const auto res = j.at("resolution").get<std::array<int, 3>>();
        const auto lo = j.at("box").at("lo").get<std::array<double, 3>>();
        const auto hi = j.at("box").at("hi").get<std::array<double, 3>>();
        Grid g(lo, hi, res);
        ck.field.grid = g;
        ck.field.mask = mask_from_rle(j.at("mask_rle").get<std::string>(), g.node_count());
        ck.field_hash = j.at("field_hash").get<std::string>();
        ck.config_hash = j.at("config_hash").get<std::string>();
        const fs::path bin = side.parent_path() / j.at("data_file").get<std::string>();
        std::ifstream is(bin, std::ios::binary);
        if (!is) throw ConfigError("cannot open " + bin.string());
        std::vector<unsigned char> bytes(8 * g.node_count());
        is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (is.gcount() != static_cast<std::streamsize>(bytes.size()) || is.peek() != EOF)
            throw ConfigError(bin.string() + ": size does not match the grid");
        ck.field.values.resize(g.node_count());
        for (std::size_t i = 0; i < ck.field.values.size(); ++i) {
            std::uint64_t u = 0;
            for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
            std::memcpy(&ck.field.values[i], &u, 8);
        }
    } catch (const json::exception& e) {
        throw ConfigError(side.string() + ": " + e.what());
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(side.string() + ": " + e.what());
    }
    return ck;
}

// ---- oracle ----

namespace {

std::vector<OracleRow> oracle_rows(const RunConfig& c, double p, std::ostream& log, SolveResult* finest) {
    if (!is_origin_gauge_ball(c.inner) || !is_origin_gauge_ball(c.outer) || c.inner.dilation != 0.0 ||
        c.outer.dilation != 0.0)
        throw ConfigError("oracle needs concentric gauge balls centred at the origin");
    const AnnulusProblem problem = make_problem(c, p);
    const ModelPotentialSpec spec(c.inner.R, c.outer.R, problem.p(), problem.params());
    std::vector<OracleRow> rows;
    for (int res : c.oracle_resolutions) {
        const auto t0 = std::chrono::steady_clock::now();
        const Grid g = build_grid(problem, res);
        const SolveResult s = solve(problem, g, c.solver);
        OracleRow row;
        row.resolution = res;
        row.h = g.h()[0];
        row.converged = s.report.converged;
        double sum = 0.0;
        for (std::size_t n = 0; n < g.node_count(); ++n) {
            if (s.field.mask.labels[n] != Region::Free) continue;
            const double e = std::abs(s.field.values[n] - model_potential(spec, g.node_point(n)));
            row.sup_error = std::max(row.sup_error, e);
            sum += e * e * g.cell_volume();
        }
        row.l2_error = std::sqrt(sum);
        try {
            row.empirical_M = sign_certificate(s.field, c.verify.m).M;
        } catch (const NoCertifiedNodes&) {
            row.empirical_M = std::nan("");
        }
        row.runtime_s = c.record_timing ? seconds_since(t0) : 0.0;
        log << "p=" << format_g(p) << " res=" << res << " converged=" << row.converged
            << " sup_error=" << format_g(row.sup_error) << " M=" << format_g(row.empirical_M) << '\n';
        rows.push_back(row);
        if (finest) *finest = s;
    }
    return rows;
}

}  // namespace

std::vector<OracleRow> oracle_table(const RunConfig& c, double p, std::ostream& log) {
    return oracle_rows(c, p, log, nullptr);
}

void write_oracle_csv(const std::string& path, const std::vector<OracleRow>& rows) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os << "resolution,h,sup_error,l2_error,empirical_M,runtime_s\n";
    os << std::setprecision(10);
    for (const auto& r : rows)
        os << r.resolution << ',' << r.h << ',' << r.sup_error << ',' << r.l2_error << ',' << r.empirical_M << ','
           << r.runtime_s << '\n';
    if (!os) throw Error("write failed for " + path);
}

// ---- commands ----

int cmd_solve(const RunConfig& c, std::ostream& log) {
    const AnnulusProblem problem = make_problem(c);
    const Grid g = build_grid(problem, c.resolution);
    const SolveResult s = solve(problem, g, c.solver);
    const fs::path out = ensure_dir(c.output_dir);
    write_checkpoint((out / "field").string(), s.field, c, s.report);
    json rep = report_json(s.report, c.record_timing);
    rep["config_hash"] = config_hash(c);
    rep["field_hash"] = field_hash(c);
    write_json(out / "solve_report.json", rep);
    log << "solve: converged=" << s.report.converged << " iterations=" << s.report.iterations
        << " residual=" << format_g(s.report.final_residual) << " dofs=" << s.report.dofs << '\n';
    return s.report.converged ? kExitOk : kExitNoConvergence;
}

int cmd_verify(const RunConfig& c, const std::string& checkpoint, std::ostream& log) {
    const Checkpoint ck = read_checkpoint(checkpoint);
    if (ck.field_hash != field_hash(c))
        throw ConfigError("checkpoint " + checkpoint + " was produced by a different problem, grid or solver setup");
    const AnnulusProblem problem = make_problem(c);
    if (!(build_grid(problem, c.resolution) == ck.field.grid)) throw ConfigError("checkpoint grid mismatch");
    const ScalarField& f = ck.field;
    const fs::path out = ensure_dir(c.output_dir);
    bool all = true;

    json j;
    j["config_hash"] = config_hash(c);
    j["field_hash"] = ck.field_hash;
    const SignCertificate cert = sign_certificate(f, c.verify.m);
    all = all && cert.pass;
    j["sign_certificate"] = json{{"M", cert.M},
                                 {"worst", point_json(cert.worst)},
                                 {"m", cert.m},
                                 {"pass", cert.pass},
                                 {"min_gradient_norm", cert.min_gradient_norm},
                                 {"certified_nodes", cert.certified_nodes},
                                 {"note", cert.note}};
    log << "sign certificate: M=" << format_g(cert.M) << (cert.pass ? " pass" : " FAIL") << '\n';

    json levels = json::array();
    for (double t : c.verify.levels) {
        json lj{{"level", t}};
        try {
            const LevelSurface s = extract_level_surface(f, t);
            const StarshapednessReport r = level_starshape(s);
            const bool closed = is_closed(s);
            const bool pass = r.strictly_starshaped() && closed;
            const std::string ply = "level_" + format_g(t) + ".ply";
            write_ply(s, (out / ply).string());
            lj.update(json{{"min_pairing", r.min_pairing},
                           {"argmin", point_json(r.argmin)},
                           {"vertices", s.vertices.size()},
                           {"triangles", s.triangles.size()},
                           {"closed", closed},
                           {"pass", pass},
                           {"mesh", ply}});
            all = all && pass;
            log << "level " << format_g(t) << ": min <nu,Z>=" << format_g(r.min_pairing)
                << (closed ? " closed" : " open") << (pass ? " pass" : " FAIL") << '\n';
        } catch (const EmptySurface& e) {
            lj.update(json{{"pass", false}, {"error", e.what()}});
            all = false;
            log << "level " << format_g(t) << ": " << e.what() << '\n';
        }
        levels.push_back(lj);
    }
    j["levels"] = levels;

    json dil = json::array();
    for (double l : c.verify.lambdas) {
        const DilationComparisonReport r = dilation_comparison_check(f, l, c.verify.m);
        all = all && r.pass;
        dil.push_back(json{{"lambda", r.lambda},
                           {"max_quotient", r.max_quotient},
                           {"argmax", point_json(r.argmax)},
                           {"nodes", r.nodes},
                           {"pass", r.pass}});
        log << "dilation lambda=" << format_g(l) << ": max quotient=" << format_g(r.max_quotient)
            << (r.pass ? " pass" : " FAIL") << '\n';
    }
    j["dilation"] = dil;
    j["pass"] = all;
    write_json(out / "verify_report.json", j);
    return all ? kExitOk : kExitCertificate;
}

int cmd_oracle(const RunConfig& c, std::ostream& log) {
    const auto rows = oracle_table(c, c.p, log);
    const fs::path out = ensure_dir(c.output_dir);
    write_oracle_csv((out / "oracle.csv").string(), rows);
    write_json(out / "oracle_meta.json", json{{"config_hash", config_hash(c)}, {"p", c.p}});
    for (const auto& r : rows)
        if (!r.converged) return kExitNoConvergence;
    return kExitOk;
}

int cmd_check_domain(const RunConfig& c, std::ostream& log) {
    AmbientParams params(c.n);
    const ImplicitDomain inner = make_domain(c.inner, c.n);
    const ImplicitDomain outer = make_domain(c.outer, c.n);
    if (!contains(inner, Point(c.n))) throw ConfigError("origin is not inside the inner domain");
    const fs::path out = ensure_dir(c.output_dir);
    bool all = true;
    json j;
    j["config_hash"] = config_hash(c);
    j["seed"] = c.seed;
    for (const auto& [name, d] : {std::pair<const char*, const ImplicitDomain*>{"inner", &inner}, {"outer", &outer}}) {
        json dj;
        dj["kind"] = d->kind_name();
        try {
            const StarshapednessReport s = starshapedness_report(*d, c.domain_check.samples, c.seed);
            dj["starshapedness"] = json{{"min_pairing", s.min_pairing},
                                        {"argmin", point_json(s.argmin)},
                                        {"samples", s.sample_count},
                                        {"strict", s.strictly_starshaped()}};
            all = all && s.strictly_starshaped();
            log << name << ": min <nu,Z>=" << format_g(s.min_pairing)
                << (s.strictly_starshaped() ? " strictly starshaped" : " NOT strictly starshaped") << '\n';
        } catch (const Error& e) {
            dj["starshapedness"] = json{{"error", e.what()}, {"strict", false}};
            all = false;
            log << name << ": " << e.what() << '\n';
        }
        json probes = json::array();
        for (double R : c.domain_check.probe_radii)
            for (ProbeSide side : {ProbeSide::Interior, ProbeSide::Exterior}) {
                const GaugeBallProbeReport pr = gauge_ball_probe(*d, side, R, c.domain_check.samples, c.seed);
                json pj{{"side", to_string(side)},
                        {"R", R},
                        {"worst_violation", pr.worst_violation},
                        {"failed_searches", pr.failed_searches},
                        {"pass", pr.pass}};
                if (pr.pass) {
                    const FlowEntryReport fe = flow_entry_check(*d, side, R, c.domain_check.samples, c.seed);
                    pj["flow_entry"] = json{{"min_lambda_bar", fe.min_lambda_bar}, {"argmin", point_json(fe.argmin)}};
                }
                log << name << ": " << to_string(side) << " gauge-ball probe R=" << format_g(R)
                    << (pr.pass ? " pass" : " fail") << '\n';
                probes.push_back(pj);
            }
        dj["gauge_ball_probes"] = probes;
        j[name] = dj;
    }
    write_json(out / "domain_check.json", j);
    return all ? kExitOk : kExitCertificate;
}

int cmd_sweep_p(const RunConfig& c, std::ostream& log) {
    if (c.oracle_resolutions.empty()) throw ConfigError("sweep needs oracle.resolutions");
    const fs::path out = ensure_dir(c.output_dir);
    int code = kExitOk;
    json summary = json::array();
    for (double p : c.sweep_p) {
        RunConfig pc = c;
        pc.p = p;
        pc.output_dir = (out / ("p_" + format_g(p))).string();
        pc.resolution.fill(c.oracle_resolutions.back());
        const fs::path dir = ensure_dir(pc.output_dir);
        SolveResult finest;
        const auto rows = oracle_rows(pc, p, log, &finest);
        write_oracle_csv((dir / "oracle.csv").string(), rows);
        write_checkpoint((dir / "field").string(), finest.field, pc, finest.report);
        int pcode = kExitOk;
        for (const auto& r : rows)
            if (!r.converged) pcode = kExitNoConvergence;
        if (pcode == kExitOk) pcode = cmd_verify(pc, (dir / "field.json").string(), log);
        summary.push_back(json{{"p", p}, {"exit_code", pcode}, {"dir", fs::path(pc.output_dir).filename().string()}});
        code = std::max(code, pcode);
    }
    write_json(out / "sweep.json", json{{"config_hash", config_hash(c)}, {"runs", summary}});
    return code;
}

}  // namespace heis
