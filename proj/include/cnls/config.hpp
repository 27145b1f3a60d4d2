#pragma once

// Configuration documents (INI) and the flat key=value report format.

#include "cnls/error.hpp"
#include "cnls/model.hpp"
#include "cnls/solver.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <array>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace cnls {

struct RunConfig {
    Problem problem;
    SolverConfig solver;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_double(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

namespace config_detail {

using boost::property_tree::ptree;

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] inline void fail(const std::string& section, const std::string& what) {
    throw Error(ErrorCode::parse_error, "[" + section + "] " + what);
}

inline double parse_number(const std::string& section, const std::string& key, std::string_view text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        fail(section, key + ": '" + t + "' is not a number");
    return v;
}

inline std::vector<double> parse_list(const std::string& section, const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::string token;
    auto flush = [&] {
        if (!token.empty()) out.push_back(parse_number(section, key, token));
        token.clear();
    };
    for (char ch : text) {
        if (ch == ',' || ch == ' ' || ch == '\t') flush();
        else token += ch;
    }
    flush();
    return out;
}

/// "[lo,hi]" groups, separated by anything outside the brackets.
inline std::vector<Interval> parse_intervals(const std::string& section, const std::string& key,
                                             const std::string& text) {
    std::vector<Interval> out;
    std::size_t pos = 0;
    while ((pos = text.find('[', pos)) != std::string::npos) {
        const auto close = text.find(']', pos);
        if (close == std::string::npos) fail(section, key + ": unterminated interval");
        const auto inner = text.substr(pos + 1, close - pos - 1);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) fail(section, key + ": interval needs the form [lo,hi]");
        out.push_back({parse_number(section, key, inner.substr(0, comma)),
                       parse_number(section, key, inner.substr(comma + 1))});
        pos = close + 1;
    }
    if (out.empty()) fail(section, key + ": expected one or more intervals [lo,hi]");
    return out;
}

class Section {
public:
    Section(std::string name, const ptree& node) : name_(std::move(name)), node_(node) {}

    [[nodiscard]] std::optional<std::string> get(const std::string& key) {
        used_.insert(key);
        const auto child = node_.get_child_optional(ptree::path_type(key, '\0'));
        if (!child) return std::nullopt;
        return trim(child->data());
    }

    std::string require(const std::string& key) {
        auto v = get(key);
        if (!v) fail(name_, "missing key '" + key + "'");
        return *v;
    }

    [[nodiscard]] std::optional<std::string> either(const std::string& one, const std::string& many) {
        auto a = get(one);
        auto b = get(many);
        if (a && b) fail(name_, "give either '" + one + "' or '" + many + "', not both");
        return a ? a : b;
    }

    double number(const std::string& key, double fallback) {
        const auto v = get(key);
        return v ? parse_number(name_, key, *v) : fallback;
    }

    std::size_t count(const std::string& key, std::size_t fallback) {
        const auto v = get(key);
        if (!v) return fallback;
        std::size_t n = 0;
        const auto res = std::from_chars(v->data(), v->data() + v->size(), n);
        if (v->empty() || res.ec != std::errc() || res.ptr != v->data() + v->size())
            fail(name_, key + ": '" + *v + "' is not a non-negative integer");
        return n;
    }

    bool flag(const std::string& key, bool fallback) {
        const auto v = get(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
        if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
        fail(name_, key + ": '" + *v + "' is not a boolean");
    }

    /// Rejects keys nobody asked for (typos).
    void finish() const {
        for (const auto& [key, child] : node_)
            if (!used_.count(key)) fail(name_, "unknown key '" + key + "'");
    }

    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
    const ptree& node_;
    std::set<std::string> used_;
};

inline CoefficientField read_field(Section s, bool potential) {
    const std::string kind = s.get("kind").value_or(potential ? "constant" : "bump");
    CoefficientField out = CoefficientField::zero();
    if (kind == "constant") {
        const auto v = s.either("value", "values");
        if (!v) s.require("value");
        const auto list = parse_list(s.name(), "value", *v);
        if (list.size() != 1) fail(s.name(), "constant field takes exactly one value");
        out = CoefficientField::constant(list[0]);
    } else if (kind == "piecewise") {
        const auto v = s.either("value", "values");
        if (!v) s.require("values");
        const auto br = s.get("breakpoints");
        out = CoefficientField::piecewise(br ? parse_list(s.name(), "breakpoints", *br) : std::vector<double>{},
                                          parse_list(s.name(), "values", *v));
    } else if (kind == "bump") {
        const auto sup = s.either("support", "supports");
        const auto v = s.either("value", "values");
        if (!sup) s.require("support");
        if (!v) s.require("value");
        const auto intervals = parse_intervals(s.name(), "support", *sup);
        const auto values = parse_list(s.name(), "value", *v);
        if (values.size() != 1 && values.size() != intervals.size())
            fail(s.name(), "give one value or one value per support interval");
        std::vector<Bump> list;
        for (std::size_t k = 0; k < intervals.size(); ++k)
            list.push_back({intervals[k], values.size() == 1 ? values[0] : values[k]});
        out = CoefficientField::bumps(std::move(list));
    } else if (kind == "zero") {
        out = CoefficientField::zero();
    } else {
        fail(s.name(), "kind must be constant, piecewise, bump or zero (got '" + kind + "')");
    }
    s.finish();
    return out;
}

inline Nonlinearity read_nonlinearity(const std::string& kind) {
    if (kind == "decoupled-cubic" || kind == "weakly-coupled") return Nonlinearity::decoupled_cubic();
    if (kind == "spinor-cubic" || kind == "spinor") return Nonlinearity::spinor_cubic();
    fail("nonlinearity", "kind must be weakly-coupled, decoupled-cubic, spinor or spinor-cubic (got '" + kind + "')");
}

inline RunConfig build(const ptree& root, bool ignore_unknown_sections) {
    static const std::set<std::string> known{"grid", "a", "b", "c", "d", "e", "f", "nonlinearity", "solver"};
    for (const auto& [name, child] : root) {
        if (known.count(name)) continue;
        if (child.empty() && !child.data().empty())
            fail(name, "key outside any section");
        if (!ignore_unknown_sections) fail(name, "unknown section");
    }
    static const ptree empty;
    auto section = [&](const std::string& name) -> const ptree* {
        const auto child = root.get_child_optional(ptree::path_type(name, '\0'));
        return child ? &*child : nullptr;
    };

    const ptree* grid_node = section("grid");
    Section grid("grid", grid_node ? *grid_node : empty);
    const double L = grid.number("L", 15.0);
    const std::size_t N = grid.count("N", 3001);
    const double margin = grid.number("decay_margin", kDefaultDecayMargin);
    grid.finish();

    auto field = [&](const std::string& name, bool potential) {
        const ptree* node = section(name);
        if (!node) {
            if (potential) fail(name, "missing section");
            return CoefficientField::zero();
        }
        return read_field(Section(name, *node), potential);
    };
    auto a = field("a", true);
    auto d = field("d", true);
    auto b = field("b", false), c = field("c", false), e = field("e", false), f = field("f", false);

    const ptree* nl_node = section("nonlinearity");
    Section nl("nonlinearity", nl_node ? *nl_node : empty);
    auto nonlinearity = read_nonlinearity(nl.get("kind").value_or("decoupled-cubic"));
    nl.finish();

    const ptree* solver_node = section("solver");
    Section sv("solver", solver_node ? *solver_node : empty);
    SolverConfig cfg;
    cfg.theta = sv.number("theta", cfg.theta);
    cfg.tol = sv.number("tol", cfg.tol);
    cfg.residual_tol = sv.number("residual_tol", cfg.residual_tol);
    cfg.max_iter = sv.count("max_iter", cfg.max_iter);
    cfg.ladder = sv.count("ladder", cfg.ladder);
    cfg.stall_window = sv.count("stall_window", cfg.stall_window);
    cfg.newton_max_iter = sv.count("newton_max_iter", cfg.newton_max_iter);
    cfg.newton_fallback = sv.flag("newton_fallback", cfg.newton_fallback);
    const std::string sym = sv.get("symmetry").value_or("none");
    if (sym == "none") cfg.symmetry = Symmetry::none;
    else if (sym == "odd") cfg.symmetry = Symmetry::odd;
    else fail("solver", "symmetry must be none or odd (got '" + sym + "')");
    sv.finish();
    if (!(cfg.theta > 0.0 && cfg.theta <= 1.0)) fail("solver", "theta must lie in (0, 1]");
    if (!(cfg.tol > 0.0)) fail("solver", "tol must be positive");
    if (!(cfg.residual_tol > 0.0)) fail("solver", "residual_tol must be positive");
    if (cfg.ladder == 0 || cfg.max_iter == 0) fail("solver", "ladder and max_iter must be positive");

    return RunConfig{Problem::create(std::move(a), std::move(b), std::move(c), std::move(d), std::move(e),
                                     std::move(f), std::move(nonlinearity), Grid(L, N), margin),
                     cfg};
}

inline std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + format_double(v[k]);
    return out;
}

inline void write_field(std::ostream& os, const std::string& name, const CoefficientField& field, bool potential) {
    switch (field.kind()) {
    case CoefficientField::Kind::constant:
        os << name << ".kind=constant\n" << name << ".value=" << format_double(field.piece_values()[0]) << '\n';
        return;
    case CoefficientField::Kind::piecewise:
        os << name << ".kind=piecewise\n";
        if (!field.breakpoints().empty()) os << name << ".breakpoints=" << join(field.breakpoints()) << '\n';
        os << name << ".values=" << join(field.piece_values()) << '\n';
        return;
    case CoefficientField::Kind::bump: {
        const auto& list = field.bump_list();
        if (list.empty()) {
            if (potential) os << name << ".kind=zero\n";
            return;
        }
        std::string sup, val;
        for (std::size_t k = 0; k < list.size(); ++k) {
            sup += (k ? " [" : "[") + format_double(list[k].support.lo) + "," + format_double(list[k].support.hi) + "]";
            val += (k ? "," : "") + format_double(list[k].value);
        }
        os << name << ".kind=bump\n" << name << ".supports=" << sup << '\n' << name << ".values=" << val << '\n';
        return;
    }
    }
}

} // namespace config_detail

/// Reads an INI document: [grid], [a]..[f], [nonlinearity], [solver].
inline RunConfig parse_config(std::string_view text) {
    boost::property_tree::ptree root;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& err) {
        throw Error(ErrorCode::parse_error, "line " + std::to_string(err.line()) + ": " + err.message());
    }
    return config_detail::build(root, false);
}

inline RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::parse_error, "cannot open '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

/// Problem and solver settings as flat section.key=value lines.
inline std::string serialize_config(const Problem& p, const SolverConfig& cfg) {
    if (p.nonlinearity().kind() == Nonlinearity::Kind::custom)
        throw Error(ErrorCode::unsupported_nonlinearity, "custom nonlinearities have no text form");
    std::ostringstream os;
    os << "grid.L=" << format_double(p.grid().half_width()) << '\n'
       << "grid.N=" << p.grid().size() << '\n'
       << "grid.decay_margin=" << format_double(p.decay_margin()) << '\n';
    config_detail::write_field(os, "a", p.a(), true);
    config_detail::write_field(os, "b", p.b(), false);
    config_detail::write_field(os, "c", p.c(), false);
    config_detail::write_field(os, "d", p.d(), true);
    config_detail::write_field(os, "e", p.e(), false);
    config_detail::write_field(os, "f", p.f(), false);
    os << "nonlinearity.kind="
       << (p.nonlinearity().kind() == Nonlinearity::Kind::decoupled_cubic ? "decoupled-cubic" : "spinor-cubic") << '\n'
       << "solver.theta=" << format_double(cfg.theta) << '\n'
       << "solver.tol=" << format_double(cfg.tol) << '\n'
       << "solver.residual_tol=" << format_double(cfg.residual_tol) << '\n'
       << "solver.max_iter=" << cfg.max_iter << '\n'
       << "solver.ladder=" << cfg.ladder << '\n'
       << "solver.stall_window=" << cfg.stall_window << '\n'
       << "solver.newton_max_iter=" << cfg.newton_max_iter << '\n'
       << "solver.newton_fallback=" << (cfg.newton_fallback ? "true" : "false") << '\n'
       << "solver.symmetry=" << (cfg.symmetry == Symmetry::odd ? "odd" : "none") << '\n';
    return os.str();
}

/// Reads the problem back from a report; keys outside the configuration
/// sections (results, witnesses) are ignored.
inline RunConfig parse_report(std::string_view text) {
    boost::property_tree::ptree root;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t number = 0;
    static const std::set<std::string> known{"grid", "a", "b", "c", "d", "e", "f", "nonlinearity", "solver"};
    while (std::getline(in, line)) {
        ++number;
        const auto t = config_detail::trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        const auto dot = t.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq)
            throw Error(ErrorCode::parse_error, "line " + std::to_string(number) + ": expected section.key=value");
        const auto section = t.substr(0, dot);
        if (!known.count(section)) continue;
        const auto key = config_detail::trim(t.substr(dot + 1, eq - dot - 1));
        auto& node = root.get_child_optional(boost::property_tree::ptree::path_type(section, '\0'))
                         ? root.get_child(boost::property_tree::ptree::path_type(section, '\0'))
                         : root.put_child(boost::property_tree::ptree::path_type(section, '\0'), {});
        if (node.get_child_optional(boost::property_tree::ptree::path_type(key, '\0')))
            throw Error(ErrorCode::parse_error, "line " + std::to_string(number) + ": duplicate key " + section + "." + key);
        node.put(boost::property_tree::ptree::path_type(key, '\0'), config_detail::trim(t.substr(eq + 1)));
    }
    return config_detail::build(root, true);
}

} // namespace cnls
