#include "qubodos/qubo.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <tuple>

#include "qubodos/errors.hpp"
#include "qubodos/rng.hpp"

namespace qubodos {

namespace {

VarPair canonical_pair(std::size_t i, std::size_t j)
{
    if (i > j) {
        std::swap(i, j);
    }
    return {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

std::string format_real(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

SpinState::SpinState(std::vector<std::uint8_t> bits) : bits_(std::move(bits))
{
    for (auto& b : bits_) {
        b = b ? 1 : 0;
    }
}

std::string SpinState::to_hex() const
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out((bits_.size() + 3) / 4, '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) {
            const int v = hex_value(out[i / 4]) | (1 << (i % 4));
            out[i / 4] = digits[v];
        }
    }
    return out;
}

SpinState SpinState::from_hex(std::string_view hex, std::size_t num_vars)
{
    if (hex.size() != (num_vars + 3) / 4) {
        throw FormatError("bitstring length " + std::to_string(hex.size()) +
                          " does not match " + std::to_string(num_vars) + " variables");
    }
    SpinState state(num_vars);
    for (std::size_t k = 0; k < hex.size(); ++k) {
        const int v = hex_value(hex[k]);
        if (v < 0) {
            throw FormatError("invalid hex digit in bitstring");
        }
        for (int b = 0; b < 4; ++b) {
            const std::size_t i = 4 * k + b;
            if ((v >> b) & 1) {
                if (i >= num_vars) {
                    throw FormatError("bitstring sets bits beyond the variable count");
                }
                state.set(i, true);
            }
        }
    }
    return state;
}

LinearForm& LinearForm::add(std::size_t var, long long coeff)
{
    coeffs[var] += coeff;
    if (coeffs[var] == 0) {
        coeffs.erase(var);
    }
    return *this;
}

long long LinearForm::value(const SpinState& state) const
{
    long long v = constant;
    for (const auto& [i, a] : coeffs) {
        if (i >= state.size()) {
            throw DimensionError("linear form index out of range");
        }
        v += a * state[i];
    }
    return v;
}

double QuboModel::quadratic(std::size_t i, std::size_t j) const
{
    const auto it = quadratic_.find(canonical_pair(i, j));
    return it == quadratic_.end() ? 0.0 : it->second;
}

std::span<const Coupling> QuboModel::neighbors(std::size_t i) const
{
    if (i >= num_vars()) {
        throw DimensionError("variable index out of range");
    }
    return std::span<const Coupling>(adj_).subspan(adj_start_[i], adj_start_[i + 1] - adj_start_[i]);
}

bool QuboModel::is_zero() const
{
    for (double h : linear_) {
        if (h != 0.0) return false;
    }
    return quadratic_.empty();
}

void QuboModel::index()
{
    const std::size_t n = num_vars();
    std::vector<std::size_t> degree(n, 0);
    for (const auto& [key, w] : quadratic_) {
        ++degree[key.first];
        ++degree[key.second];
    }
    adj_start_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        adj_start_[i + 1] = adj_start_[i] + degree[i];
    }
    adj_.resize(adj_start_[n]);
    std::vector<std::size_t> fill(adj_start_.begin(), adj_start_.end() - 1);
    for (const auto& [key, w] : quadratic_) {
        adj_[fill[key.first]++] = Coupling{key.second, w};
        adj_[fill[key.second]++] = Coupling{key.first, w};
    }
}

double QuboModel::evaluate(const SpinState& state) const
{
    if (state.size() != num_vars()) {
        throw DimensionError("state has " + std::to_string(state.size()) + " variables, model has " +
                             std::to_string(num_vars()));
    }
    double energy = offset_;
    for (std::size_t i = 0; i < linear_.size(); ++i) {
        if (state[i]) {
            energy += linear_[i];
        }
    }
    for (const auto& [key, w] : quadratic_) {
        if (state[key.first] && state[key.second]) {
            energy += w;
        }
    }
    return energy;
}

double QuboModel::delta_flip(const SpinState& state, std::size_t i) const
{
    if (state.size() != num_vars()) {
        throw DimensionError("state size does not match model");
    }
    if (i >= num_vars()) {
        throw DimensionError("flip index out of range");
    }
    double local = linear_[i];
    for (std::size_t k = adj_start_[i]; k < adj_start_[i + 1]; ++k) {
        if (state[adj_[k].other]) {
            local += adj_[k].weight;
        }
    }
    return state[i] ? -local : local;
}

QuboBuilder::QuboBuilder(std::size_t num_vars) : linear_(num_vars, 0.0) {}

QuboBuilder::QuboBuilder(const QuboModel& model)
    : linear_(model.linear_), quadratic_(model.quadratic_), offset_(model.offset_)
{
}

QuboBuilder& QuboBuilder::add_offset(double value)
{
    offset_ += value;
    return *this;
}

QuboBuilder& QuboBuilder::add_linear(std::size_t i, double h)
{
    if (i >= linear_.size()) {
        throw DimensionError("linear index out of range");
    }
    linear_[i] += h;
    return *this;
}

QuboBuilder& QuboBuilder::add_quadratic(std::size_t i, std::size_t j, double coupling)
{
    if (i >= linear_.size() || j >= linear_.size()) {
        throw DimensionError("quadratic index out of range");
    }
    if (i == j) {
        return add_linear(i, coupling);
    }
    quadratic_[canonical_pair(i, j)] += coupling;
    return *this;
}

QuboBuilder& QuboBuilder::add_squared_penalty(const LinearForm& form, double weight)
{
    if (!(weight >= 0.0)) {
        throw InvalidArgument("penalty weight must be non-negative");
    }
    for (const auto& [i, a] : form.coeffs) {
        if (i >= linear_.size()) {
            throw DimensionError("penalty form index out of range");
        }
    }
    const long long c = form.constant;
    for (auto it = form.coeffs.begin(); it != form.coeffs.end(); ++it) {
        const auto [i, a] = *it;
        // a^2 s^2 = a^2 s, plus the cross term with the constant.
        add_linear(i, weight * static_cast<double>(a * a + 2 * a * c));
        for (auto jt = std::next(it); jt != form.coeffs.end(); ++jt) {
            add_quadratic(i, jt->first, weight * static_cast<double>(2 * a * jt->second));
        }
    }
    offset_ += weight * static_cast<double>(c * c);
    return *this;
}

QuboModel QuboBuilder::build() const
{
    QuboModel model;
    model.linear_ = linear_;
    for (const auto& [key, w] : quadratic_) {
        if (w != 0.0) {
            model.quadratic_.emplace(key, w);
        }
    }
    model.offset_ = offset_;
    model.index();
    return model;
}

QuboModel add_squared_penalty(const QuboModel& model, const LinearForm& form, double weight)
{
    return QuboBuilder(model).add_squared_penalty(form, weight).build();
}

void write_qubo(std::ostream& out, const QuboModel& model)
{
    out << "qubo " << model.num_vars() << ' ' << format_real(model.offset()) << '\n';
    for (std::size_t i = 0; i < model.num_vars(); ++i) {
        if (model.linear(i) != 0.0) {
            out << "l " << i << ' ' << format_real(model.linear(i)) << '\n';
        }
    }
    for (const auto& [key, w] : model.quadratic_terms()) {
        out << "q " << key.first << ' ' << key.second << ' ' << format_real(w) << '\n';
    }
}

QuboModel read_qubo(std::istream& in)
{
    std::string line;
    bool have_header = false;
    std::size_t n = 0;
    double offset = 0.0;
    std::vector<std::pair<std::size_t, double>> lin;
    std::vector<std::tuple<std::size_t, std::size_t, double>> quad;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("layout", 0) == 0) {
            continue;
        }
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "qubo") {
            if (!(fields >> n >> offset)) throw FormatError("bad qubo header: " + line);
            have_header = true;
        } else if (tag == "l") {
            std::size_t i;
            double h;
            if (!have_header || !(fields >> i >> h)) throw FormatError("bad linear line: " + line);
            lin.emplace_back(i, h);
        } else if (tag == "q") {
            std::size_t i, j;
            double w;
            if (!have_header || !(fields >> i >> j >> w) || i == j) {
                throw FormatError("bad quadratic line: " + line);
            }
            quad.emplace_back(i, j, w);
        } else {
            throw FormatError("unknown model line: " + line);
        }
    }
    if (!have_header) {
        throw FormatError("missing qubo header");
    }
    QuboBuilder builder(n);
    builder.add_offset(offset);
    for (const auto& [i, h] : lin) builder.add_linear(i, h);
    for (const auto& [i, j, w] : quad) builder.add_quadratic(i, j, w);
    return builder.build();
}

std::string to_text(const QuboModel& model)
{
    std::ostringstream out;
    write_qubo(out, model);
    return out.str();
}

std::uint64_t model_hash(const QuboModel& model)
{
    return fnv1a64(to_text(model));
}

}  // namespace qubodos
