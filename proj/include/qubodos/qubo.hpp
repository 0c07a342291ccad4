#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qubodos {

// Assignment of 0/1 values to the binary variables of a model.
class SpinState {
public:
    SpinState() = default;
    explicit SpinState(std::size_t n) : bits_(n, 0) {}
    explicit SpinState(std::vector<std::uint8_t> bits);

    std::size_t size() const { return bits_.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    void set(std::size_t i, bool value) { bits_[i] = value ? 1 : 0; }
    void flip(std::size_t i) { bits_[i] ^= 1; }
    std::span<const std::uint8_t> bits() const { return bits_; }

    // Little-endian nibbles: hex digit k holds variables 4k..4k+3, lowest bit first.
    std::string to_hex() const;
    static SpinState from_hex(std::string_view hex, std::size_t num_vars);

    friend bool operator==(const SpinState&, const SpinState&) = default;
    friend auto operator<=>(const SpinState&, const SpinState&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

// Integer linear combination sum_i a_i sigma_i + constant.
struct LinearForm {
    std::map<std::size_t, long long> coeffs;
    long long constant = 0;

    LinearForm& add(std::size_t var, long long coeff);
    long long value(const SpinState& state) const;
};

struct Coupling {
    std::uint32_t other;
    double weight;
};

using VarPair = std::pair<std::uint32_t, std::uint32_t>;

class QuboBuilder;

// Quadratic model over binary variables:
//   H(s) = offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j.
// Immutable once built; the adjacency index makes delta_flip O(degree).
class QuboModel {
public:
    QuboModel() = default;

    std::size_t num_vars() const { return linear_.size(); }
    double offset() const { return offset_; }
    double linear(std::size_t i) const { return linear_.at(i); }
    std::span<const double> linear_terms() const { return linear_; }
    const std::map<VarPair, double>& quadratic_terms() const { return quadratic_; }
    double quadratic(std::size_t i, std::size_t j) const;
    std::span<const Coupling> neighbors(std::size_t i) const;
    bool is_zero() const;

    double evaluate(const SpinState& state) const;
    double delta_flip(const SpinState& state, std::size_t i) const;

private:
    friend class QuboBuilder;
    void index();

    std::vector<double> linear_;
    std::map<VarPair, double> quadratic_;
    double offset_ = 0.0;
    std::vector<std::size_t> adj_start_;
    std::vector<Coupling> adj_;
};

class QuboBuilder {
public:
    explicit QuboBuilder(std::size_t num_vars);
    explicit QuboBuilder(const QuboModel& model);

    std::size_t num_vars() const { return linear_.size(); }

    QuboBuilder& add_offset(double value);
    QuboBuilder& add_linear(std::size_t i, double h);
    // i == j folds into the linear term since s*s = s.
    QuboBuilder& add_quadratic(std::size_t i, std::size_t j, double coupling);
    // weight * (form)^2, expanded exactly into linear, quadratic and offset parts.
    QuboBuilder& add_squared_penalty(const LinearForm& form, double weight);

    QuboModel build() const;

private:
    std::vector<double> linear_;
    std::map<VarPair, double> quadratic_;
    double offset_ = 0.0;
};

QuboModel add_squared_penalty(const QuboModel& model, const LinearForm& form, double weight);

// Text format: "qubo <n> <offset>", then "l <i> <h>" and "q <i> <j> <J>" lines in
// ascending index order. Lines starting with '#' or "layout" are skipped by the reader.
void write_qubo(std::ostream& out, const QuboModel& model);
QuboModel read_qubo(std::istream& in);
std::string to_text(const QuboModel& model);
std::uint64_t model_hash(const QuboModel& model);

std::string format_real(double value);

}  // namespace qubodos
