#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bioinverse {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A ray found no intersection with the curve within max_length.
class NoIntersection : public Error {
public:
    explicit NoIntersection(std::size_t ray_index)
        : Error("no intersection for ray " + std::to_string(ray_index)),
          ray_index(ray_index) {}
    std::size_t ray_index;
};

// Adjacent segments cancel; no usable vertex normal.
class DegenerateNormal : public Error {
public:
    explicit DegenerateNormal(std::size_t vertex_index)
        : Error("degenerate normal at vertex " + std::to_string(vertex_index)),
          vertex_index(vertex_index) {}
    std::size_t vertex_index;
};

// Forward model could not be evaluated at the requested parameters.
class ModelFailure : public Error {
public:
    explicit ModelFailure(const std::string& what, int column = -1)
        : Error(what), column(column) {}
    // Perturbed-point index when raised inside a Jacobian batch, else -1.
    int column;
};

// Damped normal equations are numerically singular.
class SingularSystem : public Error {
public:
    using Error::Error;
};

// A nonlinear solve failed to reach its tolerance.
class NewtonDivergence : public Error {
public:
    using Error::Error;
};

// det F <= 0 at a quadrature point.
class ElementInverted : public Error {
public:
    explicit ElementInverted(std::size_t element)
        : Error("inverted element " + std::to_string(element)), element(element) {}
    std::size_t element;
};

// A parameter map collapsed a curve segment below resolvable length.
class MapDegenerate : public Error {
public:
    using Error::Error;
};

// Finite-difference step underflowed to an unusable size.
class PerturbationUnderflow : public Error {
public:
    using Error::Error;
};

// Bad configuration or input file.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace bioinverse
