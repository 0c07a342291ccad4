#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qubodos/errors.hpp"
#include "qubodos/oracle.hpp"
#include "qubodos/reweight.hpp"

using namespace qubodos;

namespace {

ConditionalAverage table(const std::map<int, double>& means)
{
    ConditionalAverage c;
    for (const auto& [b, m] : means) c.values[b] = {m, 1};
    return c;
}

DensityOfStates from_weights(const std::map<int, double>& w)
{
    std::map<int, double> counts(w.begin(), w.end());
    return dos_from_counts(counts);
}

// Canonical average of the Ising energy by direct summation over every spin configuration.
double ising_energy_canonical(int L, double beta)
{
    double num = 0.0, den = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << (L * L)); ++mask) {
        const double e = 2.0 * L * L - 4.0 * oracle::ising_npar_bits(mask, L);
        const double b = std::exp(-beta * (e + 2.0 * L * L));
        num += e * b;
        den += b;
    }
    return num / den;
}

}  // namespace

TEST_CASE("beta = 0 is the W-weighted average")
{
    const auto w = from_weights({{0, 1}, {1, 3}, {2, 6}});
    const auto cond = table({{0, 2.0}, {1, -1.0}, {2, 4.0}});
    CHECK(canonical_expectation(w, cond, 0.0) == doctest::Approx((2.0 - 3.0 + 24.0) / 10.0).epsilon(1e-14));
}

TEST_CASE("large beta picks the lowest populated bin")
{
    const auto w = from_weights({{3, 1e-6}, {4, 5}, {5, 100}});
    const auto cond = table({{3, 7.5}, {4, 1.0}, {5, 0.0}});
    CHECK(std::abs(canonical_expectation(w, cond, 1e6) - 7.5) < 1e-6);
}

TEST_CASE("L = 4 energy against direct summation")
{
    const auto exact = enumerate_ising(4).dos;
    const EnergyScale scale{32.0, -4.0};
    ConditionalAverage cond;
    for (const auto& [b, c] : exact.counts) cond.values[b] = {scale.energy(b), c};
    for (double beta : {0.2, 0.4, 0.6}) {
        const double got = canonical_expectation(exact.normalized(), cond, beta, scale);
        CHECK(got == doctest::Approx(ising_energy_canonical(4, beta)).epsilon(1e-10));
    }
}

TEST_CASE("constant observable gives a flat curve")
{
    const auto w = from_weights({{0, 1}, {1, 30}, {2, 6}});
    const auto c = curve(w, table({{0, 2.5}, {1, 2.5}, {2, 2.5}}), beta_grid(-8, 8, 0.5));
    CHECK(c.points.size() == 33);
    for (const auto& p : c.points) CHECK(p.mean == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("monotone observable with unimodal W gives a monotone curve")
{
    std::map<int, double> wmap, omap;
    for (int b = 0; b <= 20; ++b) {
        wmap[b] = std::exp(-0.05 * (b - 10) * (b - 10));
        omap[b] = 0.3 * b + 1.0;
    }
    const auto betas = beta_grid(-3, 3, 0.25);
    const auto c = curve(from_weights(wmap), table(omap), betas);
    for (std::size_t k = 0; k < betas.size(); ++k) {
        double num = 0.0, den = 0.0;
        for (const auto& [b, w] : wmap) {
            num += omap[b] * w * std::exp(-betas[k] * b);
            den += w * std::exp(-betas[k] * b);
        }
        CHECK(c.points[k].mean == doctest::Approx(num / den).epsilon(1e-12));
        if (k > 0) CHECK(c.points[k].mean < c.points[k - 1].mean);
    }
}

TEST_CASE("conditional averages pool across archives")
{
    SampleArchive a, b;
    for (int k = 0; k < 5; ++k) a.append({0, 2, SpinState(4), k, 1});
    for (int k = 0; k < 3; ++k) b.append({1, 2, SpinState(4), 10 + k, 1});
    b.append({1, 3, SpinState(4), 20, 1});
    const Observable sweep = [](const SampleRecord& r) { return static_cast<double>(r.sweep); };
    const auto pooled = conditional_average({&a, &b}, sweep);
    SampleArchive both = a;
    for (const auto& r : b.records) both.append(r);
    const auto concat = conditional_average(both, sweep);
    CHECK(pooled.mean(2) == doctest::Approx(concat.mean(2)));
    CHECK(pooled.values.at(2).count == 8);
    CHECK(pooled.mean(2) == doctest::Approx((0 + 1 + 2 + 3 + 4 + 10 + 11 + 12) / 8.0));

    const auto one = conditional_average(both, [](const SampleRecord&) { return 1.0; });
    for (const auto& [bin, v] : one.values) CHECK(v.mean == 1.0);
    CHECK_THROWS_AS(one.mean(7), InvalidArgument);
}

TEST_CASE("block curves carry an SEM")
{
    const auto w1 = from_weights({{0, 1}, {1, 1}});
    const auto w2 = from_weights({{0, 1}, {1, 3}});
    const auto cond = table({{0, 0.0}, {1, 1.0}});
    const auto c = curve(w1, cond, {0.0}, {w1, w2});
    CHECK(c.points[0].mean == doctest::Approx((0.5 + 0.75) / 2));
    CHECK(c.points[0].sem == doctest::Approx(0.125));
    CHECK_THROWS_AS(canonical_expectation(w1, table({{0, 1.0}}), 0.0), InvalidArgument);
}
