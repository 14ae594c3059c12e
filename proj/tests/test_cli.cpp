#include <doctest.h>

#include "cli.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace billspec;
using namespace billspec::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    static const std::string tag = std::to_string(std::random_device{}());
    fs::path dir = fs::temp_directory_path() / ("billspec-test-" + tag);
    fs::create_directories(dir);
    return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
    fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Row sample_row(int q, int bits) {
    Row r;
    r.q = q;
    r.bits = bits;
    r.delta = "1.25e-30";
    r.action_min = "3.5";
    r.action_minimax = "3.4999";
    return r;
}

}  // namespace

TEST_CASE("cli: row serialization") {
    Row r = sample_row(7, 256);
    r.floor = true;
    Row c = row_from_csv(to_csv(r));
    CHECK(c.q == 7);
    CHECK(c.bits == 256);
    CHECK(c.delta == r.delta);
    CHECK(c.floor);
    CHECK_FALSE(c.error);
    Row j = row_from_jsonl(to_jsonl(r));
    CHECK(j.action_minimax == r.action_minimax);
    CHECK(j.flags() == "floor");
    CHECK(csv_header() == "p,q,delta,action_min,action_minimax,bits,flags");
    CHECK_THROWS(row_from_csv("1,2,3"));
}

TEST_CASE("cli: SHA-256") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cli: run cache never returns fewer bits") {
    RunCache cache(scratch("cache-bits"));
    const std::string key = RunCache::key("curve", Table::Inner, 1, 5);
    CHECK_FALSE(cache.lookup(key, 128).has_value());
    cache.store(key, 128, sample_row(5, 128));
    CHECK(cache.lookup(key, 128)->bits == 128);
    CHECK_FALSE(cache.lookup(key, 256).has_value());
    cache.store(key, 256, sample_row(5, 512));
    cache.store(key, 1024, sample_row(5, 1024));
    CHECK(cache.lookup(key, 256)->bits == 512);
    CHECK(cache.lookup(key, 300)->bits == 512);
    CHECK(cache.lookup(key, 600)->bits == 1024);
    CHECK_FALSE(cache.lookup(key, 2048).has_value());
    Row failed = sample_row(5, 4096);
    failed.error = true;
    cache.store(key, 4096, failed);
    CHECK_FALSE(cache.lookup(key, 2048).has_value());
    CHECK(RunCache::key("curve", Table::Outer, 1, 5) != key);
}

TEST_CASE("cli: spectrum output is stable and cached") {
    auto curve = write_file("circle.toml", "c0 = 0.8\n");
    SpectrumArgs a;
    a.curve = curve.string();
    a.q_min = 3;
    a.q_max = 7;
    a.bits = 128;
    std::ostringstream log1, log2, log3, out1, out2, out3;
    a.cache_dir = scratch("cache-a").string();
    REQUIRE(cmd_spectrum(a, out1, log1) == 0);
    a.cache_dir = scratch("cache-b").string();
    REQUIRE(cmd_spectrum(a, out2, log2) == 0);
    CHECK(out1.str() == out2.str());
    CHECK(log2.str().find("cache hit") == std::string::npos);
    REQUIRE(cmd_spectrum(a, out3, log3) == 0);
    CHECK(out3.str() == out1.str());
    CHECK(log3.str().find("cache hit p=1 q=7") != std::string::npos);
    for (const char* q : {",3,", ",4,", ",5,", ",6,", ",7,"}) CHECK(out1.str().find(q) != std::string::npos);
    CHECK(out1.str().find("floor") != std::string::npos);

    a.out = scratch("spec.csv").string();
    std::ostringstream o, l;
    REQUIRE(cmd_spectrum(a, o, l) == 0);
    a.q_max = 9;
    REQUIRE(cmd_spectrum(a, o, l) == 0);
    auto rows = read_rows(a.out);
    CHECK(rows.size() == 7);
    CHECK(l.str().find("skip p=1 q=3") != std::string::npos);

    SpectrumArgs bad = a;
    bad.q_min = 10;
    bad.q_max = 4;
    CHECK(cmd_spectrum(bad, o, l) != 0);
}

TEST_CASE("cli: fit on a synthetic spectrum") {
    PrecisionScope scope(128);
    std::ostringstream csv;
    csv << csv_header() << '\n';
    for (int q = 10; q <= 30; q += 4) {
        Row r = sample_row(q, 128);
        r.delta = exp(Real("2.5") - two_pi() * Real("0.15") * q).str();
        csv << to_csv(r) << '\n';
    }
    Row floored = sample_row(34, 128);
    floored.floor = true;
    csv << to_csv(floored) << '\n';
    FitArgs f;
    f.in = write_file("synthetic.csv", csv.str()).string();
    std::ostringstream out, log;
    REQUIRE(cmd_fit(f, out, log) == 0);
    auto j = nlohmann::json::parse(out.str());
    CHECK(std::abs(std::stod(j["alpha"].get<std::string>()) - 0.15) < 1e-12);
    CHECK(std::abs(std::stod(j["logK"].get<std::string>()) - 2.5) < 1e-12);
    CHECK(j["n"].get<int>() == 6);

    f.q_min = 25;
    std::ostringstream o2, l2;
    CHECK(cmd_fit(f, o2, l2) == 1);
    CHECK(l2.str().find("fewer than 4") != std::string::npos);
}

TEST_CASE("cli: asymptotics on the circle") {
    PrecisionScope scope(128);
    AsymptoticsArgs a;
    a.curve = write_file("circle08.toml", "c0 = 0.8\n").string();
    a.bits = 128;
    std::ostringstream out, log;
    REQUIRE(cmd_asymptotics(a, out, log) == 0);
    auto j = nlohmann::json::parse(out.str());
    const Real R("0.8");
    const Real l1 = -pi() * pi() * pi() * R / 3;
    CHECK(abs(Real(std::string_view(j["l1_empirical"].get<std::string>())) - l1) < 1e-8);
    CHECK(abs(Real(std::string_view(j["l1"].get<std::string>())) - l1) < 1e-30);
}

TEST_CASE("cli: normal form ladder on the circle is trivial") {
    NormalFormArgs a;
    a.curve = write_file("circle-nf.toml", "c0 = 0.5\n").string();
    a.bits = 128;
    a.K = 4;
    a.J = 10;
    std::ostringstream out, log;
    REQUIRE(cmd_normalform(a, out, log) == 0);
    auto j = nlohmann::json::parse(out.str());
    REQUIRE(j["rungs"].size() == 4);
    for (const auto& r : j["rungs"]) CHECK(r["trivial"].get<bool>());
    CHECK(j["rungs"].back()["order"].get<int>() == 6);
}
