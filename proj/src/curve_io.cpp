#include "billspec/curve_io.hpp"

#include <json.hpp>
#include <toml.hpp>

#include <fstream>
#include <sstream>
#include <vector>

namespace billspec {

namespace {

using nlohmann::json;

// Builds a json DOM in which every floating literal is kept as its raw text.
class RawNumberSax {
public:
    json result;

    bool null() { return put(json(nullptr)); }
    bool boolean(bool v) { return put(json(v)); }
    bool number_integer(json::number_integer_t v) { return put(json(std::to_string(v))); }
    bool number_unsigned(json::number_unsigned_t v) { return put(json(std::to_string(v))); }
    bool number_float(json::number_float_t, const json::string_t& raw) { return put(json(raw)); }
    bool string(json::string_t& v) { return put(json(v)); }
    bool binary(json::binary_t&) { return false; }
    bool start_object(std::size_t) { return open(json::object()); }
    bool key(json::string_t& k) {
        keys_.back() = k;
        return true;
    }
    bool end_object() { return close(); }
    bool start_array(std::size_t) { return open(json::array()); }
    bool end_array() { return close(); }
    bool parse_error(std::size_t pos, const std::string&, const nlohmann::detail::exception& ex) {
        throw CurveError("curve JSON: parse error at byte " + std::to_string(pos) + ": " + ex.what());
    }

private:
    std::vector<json> stack_;
    std::vector<std::string> keys_;

    bool put(json v) {
        if (stack_.empty()) {
            result = std::move(v);
            return true;
        }
        json& top = stack_.back();
        if (top.is_object()) top[keys_.back()] = std::move(v);
        else top.push_back(std::move(v));
        return true;
    }
    bool open(json v) {
        stack_.push_back(std::move(v));
        keys_.emplace_back();
        return true;
    }
    bool close() {
        json v = std::move(stack_.back());
        stack_.pop_back();
        keys_.pop_back();
        return put(std::move(v));
    }
};

Real parse_number(const json& v, const char* what) {
    if (!v.is_string()) throw CurveError(std::string("curve: field '") + what + "' must be a number");
    try {
        return Real(v.get<std::string>());
    } catch (const std::invalid_argument&) {
        throw CurveError(std::string("curve: field '") + what + "' is not a decimal number");
    }
}

int parse_index(const std::string& raw) {
    std::size_t used = 0;
    int k = 0;
    try {
        k = std::stoi(raw, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != raw.size()) throw CurveError("curve: harmonic index must be an integer");
    return k;
}

std::string source_text(const std::vector<std::string>& lines, const toml::source_region& r) {
    if (r.begin.line != r.end.line || r.begin.line == 0 || r.begin.line > lines.size())
        throw CurveError("curve TOML: number spans lines");
    const std::string& line = lines[r.begin.line - 1];
    return line.substr(r.begin.column - 1, r.end.column - r.begin.column);
}

Real toml_number(const toml::node* n, const std::vector<std::string>& lines, const char* what) {
    if (n == nullptr) throw CurveError(std::string("curve: missing field '") + what + "'");
    if (n->is_string()) return Real(n->as_string()->get());
    if (!n->is_number()) throw CurveError(std::string("curve: field '") + what + "' must be a number");
    std::string raw = source_text(lines, n->source());
    std::string cleaned;
    for (char c : raw)
        if (c != '_') cleaned.push_back(c);
    try {
        return Real(cleaned);
    } catch (const std::invalid_argument&) {
        throw CurveError(std::string("curve: field '") + what + "' is not a decimal number");
    }
}

}  // namespace

FourierCurve parse_curve_json(const std::string& text) {
    PrecisionScope scope(kCurveDefinitionBits);
    RawNumberSax sax;
    json::sax_parse(text, &sax);
    const json& doc = sax.result;
    if (!doc.is_object() || !doc.contains("c0")) throw CurveError("curve JSON: missing 'c0'");
    Real c0 = parse_number(doc["c0"], "c0");
    std::vector<Harmonic> hs;
    if (doc.contains("harmonics")) {
        if (!doc["harmonics"].is_array()) throw CurveError("curve JSON: 'harmonics' must be an array");
        for (const auto& h : doc["harmonics"]) {
            if (!h.is_object() || !h.contains("k")) throw CurveError("curve JSON: harmonic needs 'k'");
            Harmonic hm;
            hm.k = parse_index(h["k"].get<std::string>());
            hm.a = h.contains("a") ? parse_number(h["a"], "a") : Real(0);
            hm.b = h.contains("b") ? parse_number(h["b"], "b") : Real(0);
            hs.push_back(std::move(hm));
        }
    }
    return FourierCurve(std::move(c0), std::move(hs));
}

FourierCurve parse_curve_toml(const std::string& text) {
    PrecisionScope scope(kCurveDefinitionBits);
    std::vector<std::string> lines;
    {
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) lines.push_back(line);
    }
    toml::table doc;
    try {
        doc = toml::parse(text);
    } catch (const toml::parse_error& e) {
        throw CurveError(std::string("curve TOML: ") + std::string(e.description()));
    }
    Real c0 = toml_number(doc.get("c0"), lines, "c0");
    std::vector<Harmonic> hs;
    if (const toml::node* hn = doc.get("harmonics")) {
        const toml::array* arr = hn->as_array();
        if (arr == nullptr) throw CurveError("curve TOML: 'harmonics' must be an array of tables");
        for (const auto& item : *arr) {
            const toml::table* t = item.as_table();
            if (t == nullptr) throw CurveError("curve TOML: harmonic must be a table");
            const toml::node* kn = t->get("k");
            if (kn == nullptr || !kn->is_integer()) throw CurveError("curve TOML: harmonic needs integer 'k'");
            Harmonic hm;
            hm.k = static_cast<int>(kn->as_integer()->get());
            hm.a = t->get("a") ? toml_number(t->get("a"), lines, "a") : Real(0);
            hm.b = t->get("b") ? toml_number(t->get("b"), lines, "b") : Real(0);
            hs.push_back(std::move(hm));
        }
    }
    return FourierCurve(std::move(c0), std::move(hs));
}

FourierCurve load_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CurveError("cannot open curve file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const bool is_toml = path.size() >= 5 && path.compare(path.size() - 5, 5, ".toml") == 0;
    return is_toml ? parse_curve_toml(ss.str()) : parse_curve_json(ss.str());
}

std::string curve_to_json(const FourierCurve& curve) {
    // numbers are written as raw JSON literals at their definition precision
    std::ostringstream os;
    os << "{\"c0\": " << curve.c0().str() << ", \"harmonics\": [";
    bool first = true;
    for (const auto& h : curve.harmonics()) {
        if (!first) os << ", ";
        first = false;
        os << "{\"k\": " << h.k << ", \"a\": " << h.a.str() << ", \"b\": " << h.b.str() << "}";
    }
    os << "]}";
    return os.str();
}

}  // namespace billspec
