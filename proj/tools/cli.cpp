#include "cli.hpp"

#include "billspec/curve_io.hpp"
#include "billspec/spectra.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace billspec::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string Row::flags() const {
    std::string f;
    if (floor) f = "floor";
    if (error) f += f.empty() ? "error" : "|error";
    return f;
}

Row to_row(const SpectrumRecord& r) {
    Row row;
    row.p = r.p;
    row.q = r.q;
    row.bits = r.bits;
    row.floor = r.precision_floor;
    row.error = !r.ok;
    row.message = r.error;
    if (r.ok) {
        row.delta = r.delta.str();
        row.action_min = r.action_min.str();
        row.action_minimax = r.action_minimax.str();
    }
    return row;
}

SpectrumRecord to_record(const Row& row) {
    PrecisionScope scope(std::max(row.bits, 64));
    SpectrumRecord r;
    r.p = row.p;
    r.q = row.q;
    r.bits = row.bits;
    r.precision_floor = row.floor;
    r.ok = !row.error;
    r.error = row.message;
    if (r.ok) {
        r.delta = Real(std::string_view(row.delta));
        r.action_min = Real(std::string_view(row.action_min));
        r.action_minimax = Real(std::string_view(row.action_minimax));
    }
    return r;
}

std::string csv_header() { return "p,q,delta,action_min,action_minimax,bits,flags"; }

std::string to_csv(const Row& r) {
    std::ostringstream os;
    os << r.p << ',' << r.q << ',' << r.delta << ',' << r.action_min << ',' << r.action_minimax << ',' << r.bits << ','
       << r.flags();
    return os.str();
}

std::string to_jsonl(const Row& r) {
    json j;
    j["p"] = r.p;
    j["q"] = r.q;
    j["delta"] = r.delta;
    j["action_min"] = r.action_min;
    j["action_minimax"] = r.action_minimax;
    j["bits"] = r.bits;
    j["flags"] = r.flags();
    if (!r.message.empty()) j["error"] = r.message;
    return j.dump();
}

namespace {

void parse_flags(Row& r, const std::string& flags) {
    std::stringstream ss(flags);
    std::string f;
    while (std::getline(ss, f, '|')) {
        if (f == "floor") r.floor = true;
        else if (f == "error") r.error = true;
        else if (!f.empty()) throw std::runtime_error("unknown flag '" + f + "'");
    }
}

}  // namespace

Row row_from_csv(const std::string& line) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw std::runtime_error("CSV row needs 7 fields: " + line);
    Row r;
    r.p = std::stoi(f[0]);
    r.q = std::stoi(f[1]);
    r.delta = f[2];
    r.action_min = f[3];
    r.action_minimax = f[4];
    r.bits = std::stoi(f[5]);
    parse_flags(r, f[6]);
    return r;
}

Row row_from_jsonl(const std::string& line) {
    json j = json::parse(line);
    Row r;
    r.p = j.at("p").get<int>();
    r.q = j.at("q").get<int>();
    r.delta = j.at("delta").get<std::string>();
    r.action_min = j.at("action_min").get<std::string>();
    r.action_minimax = j.at("action_minimax").get<std::string>();
    r.bits = j.at("bits").get<int>();
    parse_flags(r, j.value("flags", std::string()));
    r.message = j.value("error", std::string());
    return r;
}

std::vector<Row> read_rows(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<Row> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line.front() == '{') {
            rows.push_back(row_from_jsonl(line));
        } else if (first && line.rfind("p,", 0) == 0) {
            // header
        } else {
            rows.push_back(row_from_csv(line));
        }
        first = false;
    }
    return rows;
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

// ---------------------------------------------------------------------------
// RunCache

RunCache::RunCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string RunCache::key(const std::string& curve_hash, Table table, int p, int q) {
    return sha256_hex(curve_hash + "|" + to_string(table) + "|" + std::to_string(p) + "|" + std::to_string(q));
}

fs::path RunCache::file(const std::string& key) const { return dir_ / (key + ".jsonl"); }

std::optional<Row> RunCache::lookup(const std::string& key, int bits) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::ifstream in(file(key));
    if (!in) return std::nullopt;
    std::optional<Row> exact, above;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line);
        Row r = row_from_jsonl(j.at("row").dump());
        if (r.error || r.bits < bits) continue;
        if (j.at("requested_bits").get<int>() == bits) exact = r;
        else if (!above || r.bits < above->bits) above = r;
    }
    return exact ? exact : above;
}

void RunCache::store(const std::string& key, int requested_bits, const Row& row) {
    if (row.error) return;
    std::lock_guard<std::mutex> lock(mutex_);
    json j;
    j["requested_bits"] = requested_bits;
    j["row"] = json::parse(to_jsonl(row));
    std::ofstream out(file(key), std::ios::app);
    out << j.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Commands

namespace {

fs::path default_cache_dir() {
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) return fs::path(xdg) / "billspec";
    if (const char* home = std::getenv("HOME"); home && *home) return fs::path(home) / ".cache" / "billspec";
    return fs::path(".billspec-cache");
}

std::string dec(const Real& x) { return x.str(); }

}  // namespace

int cmd_spectrum(const SpectrumArgs& a, std::ostream& out, std::ostream& log) {
    if (a.p < 1 || a.q_min < 2 || a.q_max < a.q_min) {
        log << "spectrum: need p >= 1 and 2 <= q-min <= q-max\n";
        return 2;
    }
    if (a.bits < 64) {
        log << "spectrum: bits must be at least 64\n";
        return 2;
    }
    FourierCurve curve = load_curve(a.curve);
    const std::string curve_hash = sha256_hex(curve_to_json(curve));
    RunCache cache(a.cache_dir.empty() ? default_cache_dir() : fs::path(a.cache_dir));

    std::set<std::pair<int, int>> present;
    const bool append = !a.out.empty() && fs::exists(a.out) && fs::file_size(a.out) > 0;
    if (append)
        for (const Row& r : read_rows(a.out))
            if (!r.error && r.bits >= a.bits) present.insert({r.p, r.q});

    std::map<int, Row> rows;
    std::vector<int> todo;
    for (int q = a.q_min; q <= a.q_max; ++q) {
        if (std::gcd(a.p, q) != 1) continue;
        if (present.count({a.p, q})) {
            log << "skip p=" << a.p << " q=" << q << ": already in " << a.out << '\n';
            continue;
        }
        if (auto hit = cache.lookup(RunCache::key(curve_hash, a.table, a.p, q), a.bits)) {
            log << "cache hit p=" << a.p << " q=" << q << " bits=" << hit->bits << '\n';
            rows[q] = *hit;
        } else {
            todo.push_back(q);
        }
    }
    if (!todo.empty()) {
        RealContext ctx;
        ctx.mantissa_bits = a.bits;
        SpectrumOptions opts;
        opts.bits_cap = bits_cap_from_env(opts.bits_cap);
        opts.exec = a.serial ? Exec::Serial : Exec::Parallel;
        PrecisionScope scope(a.bits);
        for (const SpectrumRecord& rec : delta_spectrum({curve, a.table}, a.p, todo, ctx, opts)) {
            Row row = to_row(rec);
            if (row.error) log << "p=" << rec.p << " q=" << rec.q << " failed: " << rec.error << '\n';
            else cache.store(RunCache::key(curve_hash, a.table, a.p, rec.q), a.bits, row);
            rows[rec.q] = row;
        }
    }

    std::ofstream file;
    std::ostream* os = &out;
    if (!a.out.empty()) {
        file.open(a.out, append ? std::ios::app : std::ios::trunc);
        if (!file) {
            log << "spectrum: cannot write " << a.out << '\n';
            return 1;
        }
        os = &file;
    }
    if (a.format == Format::Csv && !append) *os << csv_header() << '\n';
    for (const auto& [q, row] : rows) *os << (a.format == Format::Csv ? to_csv(row) : to_jsonl(row)) << '\n';
    return 0;
}

int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& log) {
    std::vector<SpectrumRecord> recs;
    for (const Row& r : read_rows(a.in)) {
        if (r.p != a.p && !a.resonant) continue;
        if ((a.q_min > 0 && r.q < a.q_min) || (a.q_max > 0 && r.q > a.q_max)) continue;
        recs.push_back(to_record(r));
    }
    int bits = 64;
    for (const auto& r : recs) bits = std::max(bits, r.bits);
    PrecisionScope scope(bits);
    try {
        ExponentialFit f = a.resonant ? fit_exponential_resonant(recs, a.resonant->first, a.resonant->second)
                                      : fit_exponential(recs, a.p);
        json j;
        j["alpha"] = dec(f.alpha);
        j["logK"] = dec(f.logK);
        j["r_squared"] = dec(f.r_squared);
        j["slope"] = dec(f.line.slope);
        j["n"] = f.line.n;
        j["q_used"] = f.q_used;
        if (a.resonant) j["resonance"] = {a.resonant->first, a.resonant->second};
        out << j.dump(2) << '\n';
    } catch (const FitError& e) {
        log << "fit: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

int cmd_asymptotics(const AsymptoticsArgs& a, std::ostream& out, std::ostream&) {
    FourierCurve curve = load_curve(a.curve);
    RealContext ctx;
    ctx.mantissa_bits = a.bits;
    PrecisionScope scope(a.bits);
    const Real l1 = marvizi_melrose_l1(curve, a.p);
    const Real l1e = l1_empirical(curve, a.p, a.q, ctx);
    const A1Value a1 = tabachnikov_a1(curve);
    const Real a1e = a1_empirical(curve, a.q, ctx);
    json j;
    j["p"] = a.p;
    j["q"] = a.q;
    j["bits"] = a.bits;
    j["l1"] = dec(l1);
    j["l1_empirical"] = dec(l1e);
    j["l1_relative_error"] = abs((l1e - l1) / l1).str(6);
    j["a1"] = dec(a1.cubed);
    j["a1_uncubed"] = dec(a1.printed);
    j["a1_empirical"] = dec(a1e);
    j["a1_relative_error"] = abs((a1e - a1.cubed) / a1.cubed).str(6);
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_normalform(const NormalFormArgs& a, std::ostream& out, std::ostream& log) {
    FourierCurve curve = load_curve(a.curve);
    RealContext ctx;
    ctx.mantissa_bits = a.bits;
    PrecisionScope scope(a.bits);
    MapSeriesOptions mo;
    mo.radius = Real(std::string_view(a.radius));
    BilliardSeries s = billiard_map_series(curve, a.J, a.K, ctx, mo);
    if (!a.series_out.empty()) {
        std::ofstream f(a.series_out);
        f << to_json(s.map) << '\n';
    }
    GridOptions grid;
    grid.radius = mo.radius;
    auto steps = averaging_ladder(s.map, a.order, grid);
    const std::vector<Real> ys{Real("0.01"), pow(Real(10), Real("-2.5")), Real("0.001")};
    const Real trivial_tol = ldexp(Real(1), -a.bits / 2);

    json j;
    j["bits"] = a.bits;
    j["K"] = a.K;
    j["J"] = a.J;
    j["series"] = {{"leading", dec(s.leading)},
                   {"order2_angular", s.order2_angular.str(6)},
                   {"order3_angular", s.order3_angular.str(6)},
                   {"fit_residual", s.fit_residual.str(6)},
                   {"tail", s.tail.str(6)}};
    json rungs = json::array();
    for (size_t n = 0; n < steps.size(); ++n) {
        const AveragingStep& st = steps[n];
        auto [u_low, u_high] = k_cutoff(st.change.u, 1);
        auto [v_low, v_high] = k_cutoff(st.change.v, 1);
        const bool trivial = st.change.u.max_abs() <= trivial_tol && v_high.max_abs() <= trivial_tol;
        std::vector<AveragingStep> upto(steps.begin(), steps.begin() + n + 1);
        OrderCheck exact = ladder_order_check(curve, upto, ys, ctx);
        OrderCheck series = series_order_check(st.next, ys);
        json r;
        r["order"] = st.next.m;
        r["h1_star"] = st.h1_star.str(12);
        r["h2_star"] = st.h2_star.str(6);
        r["tail"] = st.next.tail(mo.radius).str(6);
        r["trivial"] = trivial;
        r["exact_slopes"] = {exact.angular_slope.str(6), exact.radial_slope.str(6)};
        r["series_slopes"] = {series.angular_slope.str(6), series.radial_slope.str(6)};
        rungs.push_back(r);
        log << "order " << st.next.m << ": slopes " << exact.angular_slope.str(4) << " / "
            << exact.radial_slope.str(4) << ", |h2*| " << abs(st.h2_star).str(3) << '\n';
    }
    j["rungs"] = rungs;
    out << j.dump(2) << '\n';
    return 0;
}

}  // namespace billspec::cli
