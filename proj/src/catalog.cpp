#include "mmsim/catalog.hpp"

#include "mmsim/error.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace mmsim {

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view s)
{
    s = trim(s);
    // strtod handles the exponent and "pi"-free forms we need; from_chars
    // for doubles is missing from older libstdc++.
    std::string buf(s);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (buf.empty() || end != buf.c_str() + buf.size())
        throw Error("not a number: '" + buf + "'");
    return v;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

CallExpr parse_call(std::string_view text)
{
    text = trim(text);
    CallExpr out;
    const auto open = text.find('(');
    if (open == std::string_view::npos) {
        out.name = std::string(text);
        return out;
    }
    if (text.back() != ')')
        throw Error("malformed expression '" + std::string(text) + "'");
    out.name = std::string(trim(text.substr(0, open)));
    std::string_view inner = text.substr(open + 1, text.size() - open - 2);
    while (!trim(inner).empty()) {
        const auto comma = inner.find(',');
        out.args.push_back(parse_number(inner.substr(0, comma)));
        if (comma == std::string_view::npos)
            break;
        inner.remove_prefix(comma + 1);
    }
    return out;
}

Coefficient Coefficient::constant(double c0)
{
    Coefficient c;
    c.kind_ = Kind::constant;
    c.c0_ = c0;
    return c;
}

Coefficient Coefficient::affine(double c0, double c1)
{
    Coefficient c;
    c.kind_ = Kind::affine;
    c.c0_ = c0;
    c.c1_ = c1;
    return c;
}

Coefficient Coefficient::sinusoidal(double c0, double c1, double freq)
{
    Coefficient c;
    c.kind_ = Kind::sinusoidal;
    c.c0_ = c0;
    c.c1_ = c1;
    c.freq_ = freq;
    return c;
}

Coefficient Coefficient::parse(std::string_view text)
{
    const CallExpr call = parse_call(text);
    if (call.args.empty() && !call.name.empty()
        && (std::isdigit(static_cast<unsigned char>(call.name.front())) || call.name.front() == '-'
            || call.name.front() == '+' || call.name.front() == '.'))
        return constant(parse_number(call.name));
    const auto n = call.args.size();
    if (call.name == "constant" && n == 1)
        return constant(call.args[0]);
    if (call.name == "affine" && n == 2)
        return affine(call.args[0], call.args[1]);
    if (call.name == "sinusoidal" && (n == 2 || n == 3))
        return sinusoidal(call.args[0], call.args[1], n == 3 ? call.args[2] : 1.0);
    throw Error("unknown coefficient expression '" + std::string(text)
                + "' (expected constant(c), affine(c0,c1) or sinusoidal(c0,c1[,k]))");
}

double Coefficient::value(double x) const
{
    switch (kind_) {
    case Kind::constant: return c0_;
    case Kind::affine: return c0_ + c1_ * x;
    case Kind::sinusoidal: return c0_ + c1_ * std::sin(freq_ * x);
    }
    return c0_;
}

double Coefficient::derivative(double x) const
{
    switch (kind_) {
    case Kind::constant: return 0.0;
    case Kind::affine: return c1_;
    case Kind::sinusoidal: return c1_ * freq_ * std::cos(freq_ * x);
    }
    return 0.0;
}

double Coefficient::second_derivative(double x) const
{
    if (kind_ == Kind::sinusoidal)
        return -c1_ * freq_ * freq_ * std::sin(freq_ * x);
    return 0.0;
}

bool Coefficient::periodic() const
{
    switch (kind_) {
    case Kind::constant: return true;
    case Kind::affine: return c1_ == 0.0;
    case Kind::sinusoidal: return c1_ == 0.0 || freq_ == std::round(freq_);
    }
    return false;
}

std::string Coefficient::str() const
{
    switch (kind_) {
    case Kind::constant: return "constant(" + fmt(c0_) + ")";
    case Kind::affine: return "affine(" + fmt(c0_) + ", " + fmt(c1_) + ")";
    case Kind::sinusoidal:
        return "sinusoidal(" + fmt(c0_) + ", " + fmt(c1_) + ", " + fmt(freq_) + ")";
    }
    return {};
}

Reaction Reaction::parse(std::string_view text)
{
    const CallExpr call = parse_call(text);
    if (call.name == "zero" && call.args.empty())
        return {};
    if (call.args.size() != 1)
        throw Error("reaction '" + std::string(text) + "' takes exactly one argument");
    const double a = call.args[0];
    if (call.name == "linear")
        return {Kind::linear, a};
    if (call.name == "sine")
        return {Kind::sine, a};
    if (call.name == "quadratic")
        return {Kind::quadratic, a};
    if (call.name == "logistic")
        return {Kind::logistic, a};
    throw Error("unknown reaction '" + call.name + "'");
}

double Reaction::value(double u) const
{
    switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::linear: return alpha_ * u;
    case Kind::sine: return alpha_ * std::sin(u);
    case Kind::quadratic: return alpha_ * u * u;
    case Kind::logistic: return alpha_ * u * (1.0 - u);
    }
    return 0.0;
}

double Reaction::lipschitz(double bound) const
{
    const double a = std::abs(alpha_);
    switch (kind_) {
    case Kind::zero: return 0.0;
    case Kind::linear:
    case Kind::sine: return a;
    case Kind::quadratic: return 2.0 * a * bound;
    case Kind::logistic: return a * (1.0 + 2.0 * bound);
    }
    return 0.0;
}

std::string Reaction::str() const
{
    switch (kind_) {
    case Kind::zero: return "zero";
    case Kind::linear: return "linear(" + fmt(alpha_) + ")";
    case Kind::sine: return "sine(" + fmt(alpha_) + ")";
    case Kind::quadratic: return "quadratic(" + fmt(alpha_) + ")";
    case Kind::logistic: return "logistic(" + fmt(alpha_) + ")";
    }
    return {};
}

} // namespace mmsim
