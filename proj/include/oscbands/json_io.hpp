#pragma once

#include "oscbands/averaging.hpp"
#include "oscbands/inverse.hpp"
#include "oscbands/polynomial.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>
#include <string>

namespace oscbands::io {

/// Insertion-ordered so reports keep a stable, readable layout.
using Json = nlohmann::ordered_json;

/// Malformed JSON value; the message starts with the offending path.
class SchemaError : public std::invalid_argument {
public:
    SchemaError(const std::string& path, const std::string& what) : std::invalid_argument(path + ": " + what) {}
};

/// {dim, terms:[{ax:[..], ap:[..], re, im}]}
Json to_json(const PhasePolynomial& P);
PhasePolynomial phase_from_json(const Json& j, const std::string& path = "$");

/// {dim, terms:[{alpha:[..], coeff}]}
Json to_json(const Potential& V);
Potential potential_from_json(const Json& j, const std::string& path = "$");

/// {orders:[Potential, ...]}, entry k multiplies hbar^k.
Json to_json(const SemiclassicalPotential& Vs);
SemiclassicalPotential semiclassical_from_json(const Json& j, const std::string& path = "$");

/// {"r": Potential, ...}
Json to_json(const averaging::FourierComponentMap& m);
averaging::FourierComponentMap components_from_json(const Json& j, const std::string& path = "$");

/// {method, recovered:{values, potential?, semiclassical?, series}, residuals, flags, condition_numbers}
Json to_json(const inverse::RecoveryReport& r);

/// Real number or null when not finite (JSON has no inf/nan).
Json number(double v);

} // namespace oscbands::io
