#include "mimic/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mimic/errors.hpp"
#include "mimic/parallel.hpp"

namespace mimic {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

LevyKernel kernel_from_json(const json& jk, std::size_t expected_dim) {
    std::vector<KernelAtom> atoms;
    if (jk.contains("atoms")) {
        for (const auto& ja : jk.at("atoms")) {
            KernelAtom atom;
            atom.xi = ja.at("xi").get<std::vector<double>>();
            atom.rate = ja.at("rate").get<double>();
            atoms.push_back(std::move(atom));
        }
    }
    std::size_t dim = expected_dim;
    if (!atoms.empty()) dim = atoms.front().xi.size();
    return LevyKernel::atomic(dim, std::move(atoms));
}

TruncationSpec trunc_from_json(const json& jt) {
    std::string mode = jt.value("mode", "hard");
    if (mode == "none") return TruncationSpec::none();
    if (mode == "hard") return TruncationSpec::hard(jt.value("r", 1.0));
    throw ConfigError("truncation mode must be 'hard' or 'none'");
}

}  // namespace

LevyKernel kernel_from_json_text(const std::string& text) {
    return kernel_from_json(json::parse(text), 1);
}

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    try {
        const json& js = j.at("scenario");
        cfg.scenario_name = js.at("name").get<std::string>();
        cfg.p = js.value("p", cfg.p);
        cfg.lambda1 = js.value("lambda1", cfg.lambda1);
        cfg.lambda2 = js.value("lambda2", cfg.lambda2);
        cfg.mu = js.value("mu", cfg.mu);
        cfg.lambda = js.value("lambda", cfg.lambda);
        if (js.contains("b")) cfg.const_b = js.at("b").get<std::vector<double>>();
        if (js.contains("c")) cfg.const_c = js.at("c").get<std::vector<double>>();
        if (js.contains("kernel")) {
            cfg.const_kernel = kernel_from_json(js.at("kernel"), cfg.const_b.size());
        }
        if (js.contains("truncation")) cfg.trunc_override = trunc_from_json(js.at("truncation"));
        if (js.contains("phi")) cfg.phi_name = js.at("phi").get<std::string>();

        if (j.contains("sim")) {
            const json& jm = j.at("sim");
            cfg.sim.n_particles = jm.value("n_particles", cfg.sim.n_particles);
            double dt = jm.value("dt", cfg.sim.grid.dt());
            double horizon = jm.value("horizon", cfg.sim.grid.horizon());
            if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("sim: dt and horizon must be positive");
            auto n_steps = static_cast<std::size_t>(std::llround(horizon / dt));
            if (n_steps < 1 || std::abs(horizon - static_cast<double>(n_steps) * dt) > 1e-9 * dt) {
                throw ConfigError("sim: horizon must be a whole number of steps");
            }
            cfg.sim.grid = TimeGrid(dt, n_steps);
            cfg.sim.seed = jm.value("seed", cfg.sim.seed);
            cfg.sim.store_characteristics =
                jm.value("store_characteristics", cfg.sim.store_characteristics);
        }
        if (j.contains("projection")) {
            const json& jp = j.at("projection");
            cfg.scheme.stride = jp.value("stride", cfg.scheme.stride);
            cfg.scheme.n_bins = jp.value("n_bins", cfg.scheme.n_bins);
            cfg.scheme.min_bin_count = jp.value("min_bin_count", cfg.scheme.min_bin_count);
            if (cfg.scheme.stride < 1 || cfg.scheme.n_bins < 1) {
                throw ConfigError("projection: stride and n_bins must be positive");
            }
        }
        if (j.contains("validation")) {
            const json& jv = j.at("validation");
            if (jv.contains("times")) cfg.validation_times = jv.at("times").get<std::vector<double>>();
            cfg.tolerances.ks_alpha = jv.value("ks_alpha", cfg.tolerances.ks_alpha);
            cfg.tolerances.ks_margin = jv.value("ks_margin", cfg.tolerances.ks_margin);
            if (jv.contains("ks_tolerance")) cfg.tolerances.ks_fixed = jv.at("ks_tolerance").get<double>();
            if (jv.contains("w1_tolerance")) cfg.tolerances.w1_tol = jv.at("w1_tolerance").get<double>();
            if (jv.contains("tv_tolerance")) cfg.tolerances.tv_tol = jv.at("tv_tolerance").get<double>();
            cfg.martingale_windows = jv.value("martingale_windows", cfg.martingale_windows);
            cfg.max_abs_z = jv.value("max_abs_z", cfg.max_abs_z);
            for (double t : cfg.validation_times) {
                if (!(t >= 0.0)) throw ConfigError("validation: times must be nonnegative");
            }
            if ((cfg.tolerances.ks_fixed && !(*cfg.tolerances.ks_fixed > 0.0)) ||
                (cfg.tolerances.w1_tol && !(*cfg.tolerances.w1_tol > 0.0)) ||
                (cfg.tolerances.tv_tol && !(*cfg.tolerances.tv_tol > 0.0))) {
                throw ConfigError("validation: tolerances must be positive");
            }
        }
        cfg.use_oracle = j.value("use_oracle", false);
        cfg.threads = j.value("threads", 0);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
    cfg.raw_json = j.dump(2);
    cfg.config_hash = fnv1a64(json_text);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Scenario scenario_from_config(const RunConfig& cfg) {
    Scenario scn;
    if (cfg.phi_name && cfg.scenario_name != "constant") {
        throw ConfigError("phi can only be chosen for the constant scenario");
    }
    if (cfg.scenario_name == "mixed_poisson") {
        scn = make_mixed_poisson(cfg.p, cfg.lambda1, cfg.lambda2);
    } else if (cfg.scenario_name == "iterated_integral") {
        scn = make_iterated_integral(cfg.mu, cfg.lambda);
    } else if (cfg.scenario_name == "constant") {
        LevyKernel k = cfg.const_kernel ? *cfg.const_kernel : LevyKernel::zero(cfg.const_b.size());
        TruncationSpec tr = cfg.trunc_override ? *cfg.trunc_override : TruncationSpec::hard(1.0);
        std::vector<double> c = cfg.const_c;
        if (c.size() != packed_size(cfg.const_b.size())) {
            throw ConfigError("constant scenario: c must be packed upper-triangular");
        }
        scn = make_constant_scenario(cfg.const_b, c, k, tr);
        if (cfg.phi_name) {
            try {
                scn.phi_kind = updating_kind_from_name(*cfg.phi_name);
                (void)scn.phi();  // validates the dimension
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
        }
    } else {
        scn = builtin_scenario(cfg.scenario_name);
    }
    if (cfg.trunc_override && cfg.scenario_name != "constant") scn.trunc = *cfg.trunc_override;
    return scn;
}

// --- CSV helpers ---------------------------------------------------------

namespace {

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ScenarioError("cannot open output file: " + path);
        buf_.reserve(1 << 20);
    }
    ~CsvWriter() { flush(); }

    void field(const std::string& s) {
        sep();
        buf_ += s;
    }
    void field(double v) { field(format_double(v)); }
    void field(std::uint64_t v) { field(std::to_string(v)); }
    void field(std::int64_t v) { field(std::to_string(v)); }
    void endrow() {
        buf_ += '\n';
        first_ = true;
        if (buf_.size() > (1 << 20) - 4096) flush();
    }

private:
    void sep() {
        if (!first_) buf_ += ',';
        first_ = false;
    }
    void flush() {
        out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        buf_.clear();
    }
    std::ofstream out_;
    std::string buf_;
    bool first_ = true;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double to_double(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw ConfigError("bad numeric field: " + s);
    return v;
}

}  // namespace

void write_ensemble_csv(const std::string& dir, const ParticleEnsemble& ens) {
    fs::create_directories(dir);
    const std::size_t d = ens.d;
    const std::size_t de = ens.dim_e;
    const std::size_t S = ens.n_steps();
    const bool is_mimic = ens.source_kind != "source";
    {
        CsvWriter w(dir + "/ensemble.csv");
        w.field(std::string("particle_id"));
        w.field(std::string("t"));
        for (std::size_t j = 0; j < de; ++j) w.field("z" + std::to_string(j));
        for (std::size_t j = 0; j < d; ++j) w.field("y" + std::to_string(j));
        for (std::size_t j = 0; j < d; ++j) w.field("b" + std::to_string(j));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                w.field("c" + std::to_string(i) + std::to_string(j));
            }
        }
        w.field(std::string("kernel_id"));
        if (is_mimic) w.field(std::string("source_kind"));
        w.endrow();

        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            ens.scan_z(p, [&](std::size_t i, std::span<const double> z) {
                w.field(static_cast<std::uint64_t>(p));
                w.field(ens.cfg.grid.time(i));
                for (std::size_t j = 0; j < de; ++j) w.field(z[j]);
                for (std::size_t j = 0; j < d; ++j) w.field(ens.y_at(p, i, j));
                if (ens.has_chars && i < S) {
                    const double* bp = ens.b_at(p, i);
                    for (std::size_t j = 0; j < d; ++j) w.field(bp[j]);
                    const double* cp = ens.c_at(p, i);
                    for (std::size_t r = 0; r < d; ++r) {
                        for (std::size_t cidx = 0; cidx < d; ++cidx) {
                            w.field(cp[packed_index(d, r, cidx)]);
                        }
                    }
                    w.field(static_cast<std::uint64_t>(ens.kid_at(p, i)));
                } else {
                    for (std::size_t j = 0; j < d + d * d; ++j) w.field(std::string());
                    w.field(std::string());
                }
                if (is_mimic) w.field(ens.source_kind);
                w.endrow();
            });
        }
    }
    {
        CsvWriter w(dir + "/kernels.csv");
        w.field(std::string("kernel_id"));
        w.field(std::string("atom_index"));
        for (std::size_t j = 0; j < d; ++j) w.field("xi" + std::to_string(j));
        w.field(std::string("rate"));
        w.endrow();
        if (ens.pool) {
            for (std::uint32_t kid = 0; kid < ens.pool->size(); ++kid) {
                const LevyKernel& k = ens.pool->at(kid);
                if (k.atoms().empty()) {
                    w.field(static_cast<std::uint64_t>(kid));
                    w.field(std::int64_t{-1});
                    for (std::size_t j = 0; j < d; ++j) w.field(0.0);
                    w.field(0.0);
                    w.endrow();
                }
                for (std::size_t a = 0; a < k.atoms().size(); ++a) {
                    w.field(static_cast<std::uint64_t>(kid));
                    w.field(static_cast<std::int64_t>(a));
                    for (std::size_t j = 0; j < d; ++j) w.field(k.atoms()[a].xi[j]);
                    w.field(k.atoms()[a].rate);
                    w.endrow();
                }
            }
        }
    }
    {
        CsvWriter w(dir + "/jumps.csv");
        w.field(std::string("particle_id"));
        w.field(std::string("step"));
        for (std::size_t j = 0; j < d; ++j) w.field("delta" + std::to_string(j));
        w.endrow();
        for (std::size_t p = 0; p < ens.n_particles(); ++p) {
            for (const auto& jr : ens.jumps[p]) {
                w.field(static_cast<std::uint64_t>(p));
                w.field(static_cast<std::uint64_t>(jr.step));
                for (std::size_t j = 0; j < d; ++j) w.field(jr.delta[j]);
                w.endrow();
            }
        }
    }
}

ParticleEnsemble read_ensemble_csv(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw ConfigError("missing manifest.json in " + dir);
    json manifest = json::parse(mf);
    const json& em = manifest.at("ensemble");

    ParticleEnsemble ens;
    ens.scenario_name = em.at("scenario").get<std::string>();
    ens.source_kind = em.at("source_kind").get<std::string>();
    ens.d = em.at("d").get<std::size_t>();
    ens.dim_e = em.at("dim_e").get<std::size_t>();
    ens.phi_kind = updating_kind_from_name(em.at("phi").get<std::string>());
    std::string tmode = em.at("truncation_mode").get<std::string>();
    ens.trunc = tmode == "none" ? TruncationSpec::none()
                                : TruncationSpec::hard(em.at("truncation_r").get<double>());
    ens.cfg.n_particles = em.at("n_particles").get<std::size_t>();
    ens.cfg.grid = TimeGrid(em.at("dt").get<double>(), em.at("n_steps").get<std::size_t>());
    ens.cfg.seed = em.at("seed").get<std::uint64_t>();
    ens.cfg.store_characteristics = em.at("store_characteristics").get<bool>();
    ens.has_chars = ens.cfg.store_characteristics;

    const std::size_t P = ens.cfg.n_particles;
    const std::size_t S = ens.cfg.grid.n_steps();
    const std::size_t d = ens.d;
    ens.y.assign(P * (S + 1) * d, 0.0);
    ens.z0.assign(P * ens.dim_e, 0.0);
    ens.jumps.assign(P, {});
    if (ens.has_chars) {
        ens.b_col.init(ColumnMode::PerStep, P, S, d);
        ens.c_col.init(ColumnMode::PerStep, P, S, packed_size(d));
        ens.kid_col.init(ColumnMode::PerStep, P, S, 1);
    }

    std::ifstream in(dir + "/ensemble.csv", std::ios::binary);
    if (!in) throw ConfigError("missing ensemble.csv in " + dir);
    std::string line;
    std::getline(in, line);  // header
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        std::size_t p = row / (S + 1);
        std::size_t i = row % (S + 1);
        ++row;
        if (p >= P) throw ConfigError("ensemble.csv has more rows than the manifest declares");
        std::size_t col = 2;
        if (i == 0) {
            for (std::size_t j = 0; j < ens.dim_e; ++j) {
                ens.z0[p * ens.dim_e + j] = to_double(f[col + j]);
            }
        }
        col += ens.dim_e;
        for (std::size_t j = 0; j < d; ++j) {
            ens.y[(p * (S + 1) + i) * d + j] = to_double(f[col + j]);
        }
        col += d;
        if (ens.has_chars && i < S) {
            double* bp = ens.b_col.slot(p, i);
            for (std::size_t j = 0; j < d; ++j) bp[j] = to_double(f[col + j]);
            double* cp = ens.c_col.slot(p, i);
            for (std::size_t r = 0; r < d; ++r) {
                for (std::size_t cidx = r; cidx < d; ++cidx) {
                    cp[packed_index(d, r, cidx)] = to_double(f[col + d + r * d + cidx]);
                }
            }
            *ens.kid_col.slot(p, i) =
                static_cast<std::uint32_t>(std::stoul(f[col + d + d * d]));
        }
    }
    if (row != P * (S + 1)) throw ConfigError("ensemble.csv row count mismatch");

    // kernels
    ens.pool = std::make_shared<KernelPool>();
    std::ifstream kin(dir + "/kernels.csv", std::ios::binary);
    if (!kin) throw ConfigError("missing kernels.csv in " + dir);
    std::getline(kin, line);
    std::map<std::uint32_t, std::vector<KernelAtom>> atoms_by_kid;
    std::uint32_t max_kid = 0;
    bool any = false;
    while (std::getline(kin, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        auto kid = static_cast<std::uint32_t>(std::stoul(f[0]));
        max_kid = std::max(max_kid, kid);
        any = true;
        long long aidx = std::stoll(f[1]);
        if (aidx < 0) {
            atoms_by_kid.try_emplace(kid);
            continue;
        }
        KernelAtom atom;
        for (std::size_t j = 0; j < d; ++j) atom.xi.push_back(to_double(f[2 + j]));
        atom.rate = to_double(f[2 + d]);
        atoms_by_kid[kid].push_back(std::move(atom));
    }
    if (any) {
        for (std::uint32_t kid = 0; kid <= max_kid; ++kid) {
            auto it = atoms_by_kid.find(kid);
            std::vector<KernelAtom> atoms = it == atoms_by_kid.end() ? std::vector<KernelAtom>{}
                                                                     : it->second;
            std::uint32_t got = ens.pool->intern(LevyKernel::atomic(d, std::move(atoms)));
            if (got != kid) throw ConfigError("kernels.csv ids are not canonical");
        }
    }

    // jumps
    std::ifstream jin(dir + "/jumps.csv", std::ios::binary);
    if (!jin) throw ConfigError("missing jumps.csv in " + dir);
    std::getline(jin, line);
    while (std::getline(jin, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        auto p = static_cast<std::size_t>(std::stoull(f[0]));
        JumpRec jr;
        jr.step = static_cast<std::uint32_t>(std::stoul(f[1]));
        for (std::size_t j = 0; j < d; ++j) jr.delta[j] = to_double(f[2 + j]);
        ens.jumps[p].push_back(jr);
    }
    return ens;
}

void write_projection_csv(const std::string& dir, const ProjectedCharacteristics& pc) {
    fs::create_directories(dir);
    const std::size_t d = pc.d;
    const std::size_t de = pc.dim_e;
    {
        CsvWriter w(dir + "/projection.csv");
        w.field(std::string("t"));
        w.field(std::string("bin_id"));
        for (std::size_t j = 0; j < de; ++j) w.field("lo" + std::to_string(j));
        for (std::size_t j = 0; j < de; ++j) w.field("hi" + std::to_string(j));
        for (std::size_t j = 0; j < d; ++j) w.field("b_hat" + std::to_string(j));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                w.field("c_hat" + std::to_string(i) + std::to_string(j));
            }
        }
        w.field(std::string("mixture_size"));
        w.field(std::string("total_rate"));
        w.field(std::string("count"));
        for (std::size_t j = 0; j < de; ++j) w.field("centroid" + std::to_string(j));
        w.field(std::string("flat_kernel_id"));
        w.endrow();
        for (const auto& sl : pc.slices) {
            for (std::size_t g = 0; g < sl.groups.size(); ++g) {
                const BinProj& bin = sl.groups[g];
                w.field(sl.t);
                w.field(static_cast<std::uint64_t>(g));
                for (std::size_t j = 0; j < de; ++j) w.field(bin.lo[j]);
                for (std::size_t j = 0; j < de; ++j) w.field(bin.hi[j]);
                for (std::size_t j = 0; j < d; ++j) w.field(bin.b_hat[j]);
                for (std::size_t r = 0; r < d; ++r) {
                    for (std::size_t cidx = 0; cidx < d; ++cidx) {
                        w.field(bin.c_hat_packed[packed_index(d, r, cidx)]);
                    }
                }
                w.field(static_cast<std::uint64_t>(bin.mixture.size()));
                w.field(bin.total_rate);
                w.field(static_cast<std::uint64_t>(bin.count));
                for (std::size_t j = 0; j < de; ++j) w.field(bin.centroid[j]);
                w.field(static_cast<std::uint64_t>(bin.flat_kernel_id));
                w.endrow();
            }
        }
    }
    {
        CsvWriter w(dir + "/mixture.csv");
        w.field(std::string("t"));
        w.field(std::string("bin_id"));
        w.field(std::string("member_kernel_id"));
        w.field(std::string("weight"));
        w.endrow();
        for (const auto& sl : pc.slices) {
            for (std::size_t g = 0; g < sl.groups.size(); ++g) {
                for (const auto& m : sl.groups[g].mixture) {
                    w.field(sl.t);
                    w.field(static_cast<std::uint64_t>(g));
                    w.field(static_cast<std::uint64_t>(m.kernel_id));
                    w.field(m.weight);
                    w.endrow();
                }
            }
        }
    }
    {
        // Kernel sidecar for the pool backing member and flattened ids.
        CsvWriter w(dir + "/kernels.csv");
        w.field(std::string("kernel_id"));
        w.field(std::string("atom_index"));
        for (std::size_t j = 0; j < d; ++j) w.field("xi" + std::to_string(j));
        w.field(std::string("rate"));
        w.endrow();
        for (std::uint32_t kid = 0; kid < pc.pool->size(); ++kid) {
            const LevyKernel& k = pc.pool->at(kid);
            if (k.atoms().empty()) {
                w.field(static_cast<std::uint64_t>(kid));
                w.field(std::int64_t{-1});
                for (std::size_t j = 0; j < d; ++j) w.field(0.0);
                w.field(0.0);
                w.endrow();
            }
            for (std::size_t a = 0; a < k.atoms().size(); ++a) {
                w.field(static_cast<std::uint64_t>(kid));
                w.field(static_cast<std::int64_t>(a));
                for (std::size_t j = 0; j < d; ++j) w.field(k.atoms()[a].xi[j]);
                w.field(k.atoms()[a].rate);
                w.endrow();
            }
        }
    }
}

namespace {

json projection_table_json(const ProjectedCharacteristics& pc) {
    json out;
    out["scenario"] = pc.scenario_name;
    out["d"] = pc.d;
    out["dim_e"] = pc.dim_e;
    out["phi"] = updating_kind_name(pc.phi_kind);
    out["truncation_mode"] = pc.trunc.truncates() ? "hard" : "none";
    out["truncation_r"] = pc.trunc.r;
    out["dt"] = pc.grid.dt();
    out["n_steps"] = pc.grid.n_steps();
    out["stride"] = pc.scheme.stride;
    out["n_bins"] = pc.scheme.n_bins;
    out["min_bin_count"] = pc.scheme.min_bin_count;
    json slices = json::array();
    for (const auto& sl : pc.slices) {
        json jsl;
        jsl["step"] = sl.step;
        jsl["active"] = sl.active;
        jsl["edges"] = sl.edges;
        jsl["dim_scale"] = sl.dim_scale;
        jsl["cell_to_group"] = sl.cell_to_group;
        slices.push_back(std::move(jsl));
    }
    out["slices"] = std::move(slices);
    return out;
}

}  // namespace

void write_manifest(const std::string& dir, const std::string& command, const RunConfig& cfg,
                    const ParticleEnsemble* ens, const ProjectedCharacteristics* pc) {
    fs::create_directories(dir);
    json m;
    m["tool"] = "mimic";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["seed"] = cfg.sim.seed;
    m["config"] = json::parse(cfg.raw_json.empty() ? "{}" : cfg.raw_json);
    m["config_hash"] = hex64(cfg.config_hash);
    if (ens != nullptr) {
        json em;
        em["scenario"] = ens->scenario_name;
        em["source_kind"] = ens->source_kind;
        em["d"] = ens->d;
        em["dim_e"] = ens->dim_e;
        em["phi"] = updating_kind_name(ens->phi_kind);
        em["truncation_mode"] = ens->trunc.truncates() ? "hard" : "none";
        em["truncation_r"] = ens->trunc.r;
        em["n_particles"] = ens->cfg.n_particles;
        em["dt"] = ens->cfg.grid.dt();
        em["n_steps"] = ens->cfg.grid.n_steps();
        em["seed"] = ens->cfg.seed;
        em["store_characteristics"] = ens->cfg.store_characteristics;
        em["fallback_count"] = ens->fallback_count;
        em["lookup_count"] = ens->lookup_count;
        em["flagged"] = ens->flagged;
        em["thinning_warnings"] = ens->thinning_warnings;
        em["max_rate_dt"] = ens->max_rate_dt;
        m["ensemble"] = std::move(em);
    }
    if (pc != nullptr) m["projection_table"] = projection_table_json(*pc);
    std::ofstream out(dir + "/manifest.json", std::ios::binary);
    out << m.dump(2) << "\n";
}

ProjectedCharacteristics read_projection_csv(const std::string& dir) {
    std::ifstream mf(dir + "/manifest.json");
    if (!mf) throw ConfigError("missing manifest.json in " + dir);
    json manifest = json::parse(mf);
    if (!manifest.contains("projection_table")) {
        throw ConfigError("manifest in " + dir + " has no projection table");
    }
    const json& pt = manifest.at("projection_table");

    ProjectedCharacteristics pc;
    pc.scenario_name = pt.at("scenario").get<std::string>();
    pc.d = pt.at("d").get<std::size_t>();
    pc.dim_e = pt.at("dim_e").get<std::size_t>();
    pc.phi_kind = updating_kind_from_name(pt.at("phi").get<std::string>());
    pc.trunc = pt.at("truncation_mode").get<std::string>() == "none"
                   ? TruncationSpec::none()
                   : TruncationSpec::hard(pt.at("truncation_r").get<double>());
    pc.grid = TimeGrid(pt.at("dt").get<double>(), pt.at("n_steps").get<std::size_t>());
    pc.scheme.stride = pt.at("stride").get<std::size_t>();
    pc.scheme.n_bins = pt.at("n_bins").get<std::size_t>();
    pc.scheme.min_bin_count = pt.at("min_bin_count").get<std::size_t>();

    for (const auto& jsl : pt.at("slices")) {
        SliceProj sl;
        sl.step = jsl.at("step").get<std::size_t>();
        sl.t = pc.grid.time(sl.step);
        sl.active = jsl.at("active").get<std::vector<std::uint8_t>>();
        sl.edges = jsl.at("edges").get<std::vector<std::vector<double>>>();
        sl.dim_scale = jsl.at("dim_scale").get<std::vector<double>>();
        sl.cell_to_group = jsl.at("cell_to_group").get<std::vector<std::int32_t>>();
        pc.slices.push_back(std::move(sl));
    }

    // kernels
    pc.pool = std::make_shared<KernelPool>();
    std::ifstream kin(dir + "/kernels.csv", std::ios::binary);
    if (!kin) throw ConfigError("missing kernels.csv in " + dir);
    std::string line;
    std::getline(kin, line);
    std::map<std::uint32_t, std::vector<KernelAtom>> atoms_by_kid;
    std::uint32_t max_kid = 0;
    bool any = false;
    while (std::getline(kin, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        auto kid = static_cast<std::uint32_t>(std::stoul(f[0]));
        max_kid = std::max(max_kid, kid);
        any = true;
        long long aidx = std::stoll(f[1]);
        if (aidx < 0) {
            atoms_by_kid.try_emplace(kid);
            continue;
        }
        KernelAtom atom;
        for (std::size_t j = 0; j < pc.d; ++j) atom.xi.push_back(to_double(f[2 + j]));
        atom.rate = to_double(f[2 + pc.d]);
        atoms_by_kid[kid].push_back(std::move(atom));
    }
    if (any) {
        for (std::uint32_t kid = 0; kid <= max_kid; ++kid) {
            auto it = atoms_by_kid.find(kid);
            std::vector<KernelAtom> atoms = it == atoms_by_kid.end() ? std::vector<KernelAtom>{}
                                                                     : it->second;
            std::uint32_t got = pc.pool->intern(LevyKernel::atomic(pc.d, std::move(atoms)));
            if (got != kid) throw ConfigError("kernels.csv ids are not canonical");
        }
    }

    // groups from projection.csv + mixtures
    std::map<double, std::size_t> slice_of_t;
    for (std::size_t k = 0; k < pc.slices.size(); ++k) slice_of_t[pc.slices[k].t] = k;
    auto slice_for = [&](double t) {
        auto it = slice_of_t.find(t);
        if (it == slice_of_t.end()) throw ConfigError("projection files reference an unknown slice time");
        return it->second;
    };
    std::ifstream pin(dir + "/projection.csv", std::ios::binary);
    if (!pin) throw ConfigError("missing projection.csv in " + dir);
    std::getline(pin, line);
    const std::size_t d = pc.d, de = pc.dim_e;
    while (std::getline(pin, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        std::size_t slice_idx = slice_for(to_double(f[0]));
        BinProj bin;
        std::size_t col = 2;
        bin.lo.resize(de);
        bin.hi.resize(de);
        for (std::size_t j = 0; j < de; ++j) bin.lo[j] = to_double(f[col + j]);
        col += de;
        for (std::size_t j = 0; j < de; ++j) bin.hi[j] = to_double(f[col + j]);
        col += de;
        bin.b_hat.resize(d);
        for (std::size_t j = 0; j < d; ++j) bin.b_hat[j] = to_double(f[col + j]);
        col += d;
        bin.c_hat_packed.assign(packed_size(d), 0.0);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t cidx = r; cidx < d; ++cidx) {
                bin.c_hat_packed[packed_index(d, r, cidx)] = to_double(f[col + r * d + cidx]);
            }
        }
        col += d * d;
        col += 1;  // mixture_size
        bin.total_rate = to_double(f[col]);
        ++col;
        bin.count = static_cast<std::size_t>(std::stoull(f[col]));
        ++col;
        bin.centroid.resize(de);
        for (std::size_t j = 0; j < de; ++j) bin.centroid[j] = to_double(f[col + j]);
        col += de;
        bin.flat_kernel_id = static_cast<std::uint32_t>(std::stoul(f[col]));
        pc.slices[slice_idx].groups.push_back(std::move(bin));
    }

    // mixtures
    std::ifstream min(dir + "/mixture.csv", std::ios::binary);
    if (!min) throw ConfigError("missing mixture.csv in " + dir);
    std::getline(min, line);
    while (std::getline(min, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        std::size_t slice_idx = slice_for(to_double(f[0]));
        auto g = static_cast<std::size_t>(std::stoull(f[1]));
        MixtureMember m;
        m.kernel_id = static_cast<std::uint32_t>(std::stoul(f[2]));
        m.weight = to_double(f[3]);
        pc.slices[slice_idx].groups.at(g).mixture.push_back(m);
    }
    return pc;
}

void write_marginal_csv(const std::string& path, const MarginalReport& report) {
    CsvWriter w(path);
    w.field(std::string("t"));
    w.field(std::string("coord"));
    w.field(std::string("n_a"));
    w.field(std::string("n_b"));
    w.field(std::string("ks"));
    w.field(std::string("ks_tol"));
    w.field(std::string("w1"));
    w.field(std::string("tv"));
    w.field(std::string("tv_defined"));
    w.field(std::string("pass"));
    w.endrow();
    for (const auto& r : report.rows) {
        w.field(r.t);
        w.field(static_cast<std::uint64_t>(r.coord));
        w.field(static_cast<std::uint64_t>(r.n_a));
        w.field(static_cast<std::uint64_t>(r.n_b));
        w.field(r.ks);
        w.field(r.ks_tol);
        w.field(r.w1);
        w.field(r.tv_defined ? format_double(r.tv) : std::string());
        w.field(std::string(r.tv_defined ? "1" : "0"));
        w.field(std::string(r.pass ? "1" : "0"));
        w.endrow();
    }
}

void write_martingale_csv(const std::string& path, const MartingaleReport& a,
                          const MartingaleReport& b) {
    CsvWriter w(path);
    w.field(std::string("ensemble"));
    w.field(std::string("process"));
    w.field(std::string("component"));
    w.field(std::string("window"));
    w.field(std::string("t0"));
    w.field(std::string("t1"));
    w.field(std::string("mean"));
    w.field(std::string("se"));
    w.field(std::string("z"));
    w.endrow();
    auto dump = [&](const char* tag, const MartingaleReport& rep) {
        for (const auto& r : rep.rows) {
            w.field(std::string(tag));
            w.field(r.process);
            w.field(r.component);
            w.field(static_cast<std::uint64_t>(r.window));
            w.field(r.t0);
            w.field(r.t1);
            w.field(r.mean);
            w.field(r.se);
            w.field(r.z);
            w.endrow();
        }
    };
    dump("a", a);
    dump("b", b);
}

void write_summary(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& l : lines) out << l << "\n";
}

}  // namespace mimic
