#include "qubodos/ising.hpp"

#include <cmath>
#include <ostream>

#include "qubodos/errors.hpp"

namespace qubodos {

std::vector<std::size_t> IsingLayout::slack_vars() const
{
    std::vector<std::size_t> out;
    for (int k = 0; k < m; ++k) {
        out.push_back(slack(k));
    }
    return out;
}

IsingLayout make_ising_layout(int L, int m)
{
    if (L < 2 || L % 2 != 0) {
        throw InvalidArgument("Ising lattice side must be even and >= 2, got " + std::to_string(L));
    }
    if (m < 0 || m > 30) {
        throw InvalidArgument("slack count out of range");
    }
    IsingLayout layout;
    layout.L = L;
    layout.m = m;
    for (int r = 0; r < L; ++r) {
        for (int c = 0; c < L; ++c) {
            const int site = r * L + c;
            layout.edges.emplace_back(site, r * L + (c + 1) % L);
            layout.edges.emplace_back(site, ((r + 1) % L) * L + c);
        }
    }
    return layout;
}

double ising_edge_energy(int si, int sj, int eta, int theta)
{
    return 1 + 2 * si * sj + 2 * (si + sj) * eta - 4 * (si + sj + eta) * theta - si - sj - eta + 8 * theta;
}

IsingModel build_ising(int L, const ParallelInterval& interval, double A)
{
    IsingLayout layout = make_ising_layout(L, interval.m);
    if (interval.n_bar < 0 || interval.n_bar > L * L) {
        throw InvalidArgument("interval start " + std::to_string(interval.n_bar) + " outside [0, " +
                              std::to_string(L * L) + "]");
    }
    if (!(A > 0.0)) {
        throw InvalidArgument("penalty coefficient A must be positive");
    }

    QuboBuilder builder(layout.num_vars());
    for (int e = 0; e < layout.num_edges(); ++e) {
        const auto si = layout.sigma(layout.edges[e].first);
        const auto sj = layout.sigma(layout.edges[e].second);
        const auto eta = layout.eta(e);
        const auto theta = layout.theta(e);
        // V_ij = 1 + 2 si sj + 2 (si + sj) eta - 4 (si + sj + eta) theta - si - sj - eta + 8 theta
        builder.add_offset(1.0);
        builder.add_quadratic(si, sj, 2.0);
        builder.add_quadratic(si, eta, 2.0);
        builder.add_quadratic(sj, eta, 2.0);
        builder.add_quadratic(si, theta, -4.0);
        builder.add_quadratic(sj, theta, -4.0);
        builder.add_quadratic(eta, theta, -4.0);
        builder.add_linear(si, -1.0);
        builder.add_linear(sj, -1.0);
        builder.add_linear(eta, -1.0);
        builder.add_linear(theta, 8.0);
    }

    LinearForm slack_form;
    for (int e = 0; e < layout.num_edges(); ++e) {
        slack_form.add(layout.eta(e), 1);
    }
    for (int k = 0; k < interval.m; ++k) {
        slack_form.add(layout.slack(k), -2LL * (1LL << k));
    }
    slack_form.constant = -2LL * interval.n_bar;
    builder.add_squared_penalty(slack_form, A);

    return IsingModel{builder.build(), std::move(layout), interval};
}

int count_parallel(const std::vector<int>& spins, int L)
{
    int parallel = 0;
    for (int r = 0; r < L; ++r) {
        for (int c = 0; c < L; ++c) {
            const int s = spins[r * L + c];
            parallel += s == spins[r * L + (c + 1) % L];
            parallel += s == spins[((r + 1) % L) * L + c];
        }
    }
    return parallel / 2;
}

IsingDecoded decode_ising(const SpinState& state, const IsingLayout& layout)
{
    if (state.size() != layout.num_vars()) {
        throw DimensionError("state size does not match Ising layout");
    }
    IsingDecoded out;
    out.spins.resize(layout.num_sites());
    for (int s = 0; s < layout.num_sites(); ++s) {
        out.spins[s] = state[layout.sigma(s)];
    }
    int eta_sum = 0;
    for (int e = 0; e < layout.num_edges(); ++e) {
        const int xnor = out.spins[layout.edges[e].first] == out.spins[layout.edges[e].second] ? 1 : 0;
        if (state[layout.eta(e)] != xnor) {
            throw CorruptStateError("XNOR violation on edge " + std::to_string(e));
        }
        eta_sum += xnor;
    }
    if (eta_sum % 2 != 0) {
        throw CorruptStateError("odd number of parallel pairs");
    }
    out.n_par = eta_sum / 2;
    return out;
}

Validation validate_ground_state(const SpinState& state, const QuboModel& model, const IsingLayout& layout,
                                 const ParallelInterval& interval)
{
    Validation v;
    if (state.size() != layout.num_vars() || model.num_vars() != layout.num_vars()) {
        v.reason = "dimension mismatch";
        return v;
    }
    IsingDecoded decoded;
    try {
        decoded = decode_ising(state, layout);
    } catch (const CorruptStateError& e) {
        v.reason = std::string(e.what()).rfind("XNOR", 0) == 0 ? "XNOR violation" : e.what();
        return v;
    }
    v.bin = decoded.n_par;
    if (!interval.contains(decoded.n_par)) {
        v.reason = "n_par outside interval";
        return v;
    }
    if (std::abs(model.evaluate(state)) > 1e-9) {
        v.reason = "nonzero energy (ancilla or slack not minimal)";
        return v;
    }
    v.ok = true;
    return v;
}

SpinState complete_ising_state(const std::vector<int>& spins, const IsingLayout& layout,
                               const ParallelInterval& interval)
{
    if (static_cast<int>(spins.size()) != layout.num_sites()) {
        throw DimensionError("spin grid size does not match layout");
    }
    SpinState state(layout.num_vars());
    int eta_sum = 0;
    for (int s = 0; s < layout.num_sites(); ++s) {
        state.set(layout.sigma(s), spins[s] != 0);
    }
    for (int e = 0; e < layout.num_edges(); ++e) {
        const int si = spins[layout.edges[e].first] != 0;
        const int sj = spins[layout.edges[e].second] != 0;
        const int eta = si == sj ? 1 : 0;
        // Pick the ancilla value that minimizes the edge gadget.
        const int theta = ising_edge_energy(si, sj, eta, 1) < ising_edge_energy(si, sj, eta, 0) ? 1 : 0;
        state.set(layout.eta(e), eta);
        state.set(layout.theta(e), theta);
        eta_sum += eta;
    }
    const int n_par = eta_sum / 2;
    if (!interval.contains(n_par)) {
        throw InvalidArgument("spin grid has n_par " + std::to_string(n_par) + " outside the interval");
    }
    const int excess = n_par - interval.n_bar;
    for (int k = 0; k < layout.m; ++k) {
        state.set(layout.slack(k), (excess >> k) & 1);
    }
    return state;
}

void write_ising_layout(std::ostream& out, const IsingLayout& layout, const ParallelInterval& interval)
{
    out << "layout ising L " << layout.L << " m " << layout.m << " n_bar " << interval.n_bar << '\n';
    out << "layout ranges sigma 0 " << layout.num_sites() << " eta " << layout.eta(0) << ' ' << layout.num_edges()
        << " theta " << layout.theta(0) << ' ' << layout.num_edges() << " slack " << layout.slack(0) << ' '
        << layout.m << '\n';
}

}  // namespace qubodos
