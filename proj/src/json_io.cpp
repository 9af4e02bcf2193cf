#include "oscbands/json_io.hpp"

#include <cmath>

namespace oscbands::io {

namespace {

const Json& field(const Json& j, const char* key, const std::string& path)
{
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) throw SchemaError(path, std::string("missing field '") + key + "'");
    return *it;
}

double real_value(const Json& j, const std::string& path)
{
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "number is not finite");
    return v;
}

int dim_value(const Json& j, const std::string& path)
{
    if (!j.is_number_integer()) throw SchemaError(path, "dim must be an integer");
    const int n = j.get<int>();
    if (n < 1 || n > kMaxDim) throw SchemaError(path, "dim must lie in [1, " + std::to_string(kMaxDim) + "]");
    return n;
}

std::vector<int> exponents(const Json& j, int n, const std::string& path)
{
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        throw SchemaError(path, "expected an array of " + std::to_string(n) + " exponents");
    std::vector<int> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number_integer() || j[i].get<int>() < 0 || j[i].get<int>() > 255)
            throw SchemaError(path + "[" + std::to_string(i) + "]", "exponent must be an integer in [0, 255]");
        out.push_back(j[i].get<int>());
    }
    return out;
}

const Json& terms_array(const Json& j, const std::string& path)
{
    const Json& t = field(j, "terms", path);
    if (!t.is_array()) throw SchemaError(path + ".terms", "expected an array");
    return t;
}

} // namespace

Json number(double v)
{
    if (!std::isfinite(v)) return nullptr;
    return v;
}

Json to_json(const PhasePolynomial& P)
{
    Json terms = Json::array();
    for (const auto& t : P.terms()) terms.push_back({{"ax", t.ax}, {"ap", t.ap}, {"re", t.c.real()}, {"im", t.c.imag()}});
    return {{"dim", P.dim()}, {"terms", terms}};
}

PhasePolynomial phase_from_json(const Json& j, const std::string& path)
{
    const int n = dim_value(field(j, "dim", path), path + ".dim");
    PhasePolynomial P(n);
    const Json& terms = terms_array(j, path);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = path + ".terms[" + std::to_string(i) + "]";
        auto ax = exponents(field(terms[i], "ax", p), n, p + ".ax");
        auto ap = exponents(field(terms[i], "ap", p), n, p + ".ap");
        const double re = terms[i].contains("re") ? real_value(terms[i]["re"], p + ".re") : 0.0;
        const double im = terms[i].contains("im") ? real_value(terms[i]["im"], p + ".im") : 0.0;
        P.add_term(ax, ap, cplx(re, im));
    }
    return P;
}

Json to_json(const Potential& V)
{
    if (!V.is_polynomial()) throw std::invalid_argument("evaluation-only potentials cannot be serialized");
    Json terms = Json::array();
    for (const auto& [alpha, c] : V.terms()) terms.push_back({{"alpha", alpha}, {"coeff", c}});
    return {{"dim", V.dim()}, {"terms", terms}};
}

Potential potential_from_json(const Json& j, const std::string& path)
{
    const int n = dim_value(field(j, "dim", path), path + ".dim");
    Potential V(n);
    const Json& terms = terms_array(j, path);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const std::string p = path + ".terms[" + std::to_string(i) + "]";
        V.add_term(exponents(field(terms[i], "alpha", p), n, p + ".alpha"),
                   real_value(field(terms[i], "coeff", p), p + ".coeff"));
    }
    return V;
}

Json to_json(const SemiclassicalPotential& Vs)
{
    Json orders = Json::array();
    for (const auto& V : Vs.orders) orders.push_back(to_json(V));
    return {{"orders", orders}};
}

SemiclassicalPotential semiclassical_from_json(const Json& j, const std::string& path)
{
    const Json& orders = field(j, "orders", path);
    if (!orders.is_array() || orders.empty()) throw SchemaError(path + ".orders", "expected a non-empty array");
    SemiclassicalPotential Vs;
    for (std::size_t i = 0; i < orders.size(); ++i)
        Vs.orders.push_back(potential_from_json(orders[i], path + ".orders[" + std::to_string(i) + "]"));
    for (std::size_t i = 1; i < Vs.orders.size(); ++i)
        if (Vs.orders[i].dim() != Vs.orders[0].dim())
            throw SchemaError(path + ".orders[" + std::to_string(i) + "]", "dimension differs from order 0");
    return Vs;
}

Json to_json(const averaging::FourierComponentMap& m)
{
    Json out = Json::object();
    for (const auto& [r, V] : m) out[std::to_string(r)] = to_json(V);
    return out;
}

averaging::FourierComponentMap components_from_json(const Json& j, const std::string& path)
{
    if (!j.is_object()) throw SchemaError(path, "expected an object keyed by r");
    averaging::FourierComponentMap m;
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::size_t used = 0;
        int r = 0;
        try {
            r = std::stoi(it.key(), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != it.key().size()) throw SchemaError(path, "key '" + it.key() + "' is not an integer");
        m.emplace(r, potential_from_json(it.value(), path + "." + it.key()));
    }
    return m;
}

Json to_json(const inverse::RecoveryReport& r)
{
    Json rec;
    Json values = Json::array();
    for (double v : r.values) values.push_back(number(v));
    rec["values"] = values;
    if (r.potential) rec["potential"] = to_json(*r.potential);
    if (r.semiclassical) rec["semiclassical"] = to_json(*r.semiclassical);
    Json series = Json::object();
    for (const auto& [k, v] : r.series) {
        Json col = Json::array();
        for (double x : v) col.push_back(number(x));
        series[k] = col;
    }
    rec["series"] = series;
    Json out;
    out["method"] = r.method;
    out["recovered"] = rec;
    Json residuals = Json::object();
    for (const auto& [k, v] : r.residuals) residuals[k] = number(v);
    out["residuals"] = residuals;
    Json flags = Json::object();
    for (const auto& [k, v] : r.flags) flags[k] = v;
    out["flags"] = flags;
    Json cond = Json::object();
    for (const auto& [k, v] : r.condition_numbers) cond[k] = number(v);
    out["condition_numbers"] = cond;
    return out;
}

} // namespace oscbands::io
