#pragma once

// Closed-form expression catalog shared by the map families, strip profiles,
// sources, reaction terms and initial data. Everything a config may name lives here.

#include <string>
#include <string_view>
#include <vector>

namespace mmsim {

/// Scalar function of the first macro coordinate:
/// constant c0, affine c0 + c1 x, or sinusoidal c0 + c1 sin(k x).
class Coefficient {
public:
    enum class Kind { constant, affine, sinusoidal };

    Coefficient() = default;
    static Coefficient constant(double c0);
    static Coefficient affine(double c0, double c1);
    static Coefficient sinusoidal(double c0, double c1, double freq = 1.0);

    /// Accepts "2.5", "constant(2)", "affine(1, 0.1)", "sinusoidal(1, 0.5[, k])".
    static Coefficient parse(std::string_view text);

    Kind kind() const { return kind_; }
    double value(double x) const;
    double derivative(double x) const;
    double second_derivative(double x) const;

    /// True when the function is 2π-periodic (constant, or integer frequency).
    bool periodic() const;
    std::string str() const;

private:
    Kind kind_ = Kind::constant;
    double c0_ = 0.0;
    double c1_ = 0.0;
    double freq_ = 1.0;
};

/// Semilinear macro reaction term f(u) with a declared Lipschitz constant.
///
/// `quadratic` and `logistic` are only locally Lipschitz; their constant is
/// declared on the ball |u| <= bound (the blow-up guard).
class Reaction {
public:
    enum class Kind { zero, linear, sine, quadratic, logistic };

    Reaction() = default;
    Reaction(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}

    /// Accepts "zero", "linear(a)", "sine(a)", "quadratic(a)", "logistic(a)".
    static Reaction parse(std::string_view text);

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    bool is_zero() const { return kind_ == Kind::zero || alpha_ == 0.0; }
    double value(double u) const;
    double lipschitz(double bound) const;
    std::string str() const;

private:
    Kind kind_ = Kind::zero;
    double alpha_ = 0.0;
};

/// Parsed "name(arg, arg, ...)" call; a bare token yields an empty argument list.
struct CallExpr {
    std::string name;
    std::vector<double> args;
};

CallExpr parse_call(std::string_view text);

} // namespace mmsim
