#pragma once
// The statistical battery: frequentist tests implemented from first
// principles (no statistics package behind them) plus seeded Bayesian mean
// contrasts with highest-density intervals.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ehk::stats {

struct TestResult {
    std::string test_name;
    double statistic = 0.0;
    std::vector<int> df; // empty when inapplicable
    double p_value = 1.0;
    std::map<std::string, double> extras;
};

struct Group {
    std::string name;
    std::vector<double> values;
};

struct TukeyPair {
    std::string group_a;
    std::string group_b;
    double mean_diff = 0.0; // mean(a) - mean(b)
    double p_adj = 1.0;
    bool reject = false; // p_adj < alpha
};

struct PosteriorContrast {
    std::string label; // "a - b"
    double mean = 0.0;
    double hdi_low = 0.0;
    double hdi_high = 0.0;
    double prob_gt_zero = 0.5;
    double mass = 0.95;
};

// One-way fixed-effects ANOVA. Needs >= 2 groups of >= 2 values.
// All-equal group means with zero within-group variance give F = 0, p = 1.
TestResult one_way_anova(const std::vector<Group>& groups);

// All pairwise contrasts with studentized-range adjusted p values
// (Tukey-Kramer standard errors for unequal group sizes).
std::vector<TukeyPair> tukey_hsd(const std::vector<Group>& groups, double alpha = 0.05);

// Two-tailed paired t test. Zero-variance differences are a domain error.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

// Mann-Whitney U with midrank ties. Exact enumeration of the null
// distribution when n_a * n_b <= 400 and no ties are present, otherwise the
// normal approximation with tie and continuity correction. statistic is U
// for the first sample.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Exact two-tailed binomial p: sum of point probabilities <= P(k).
double binomial_two_tailed(int k, int n, double p0);

// Friedman chi-square with midrank ties correction. matrix[subject][condition].
TestResult friedman(const std::vector<std::vector<double>>& matrix);

// One covariate analysis of covariance; F test for the group factor on
// df (k-1, N-k-1). Constant covariate is a singular design.
TestResult ancova(std::span<const double> post,
                  const std::vector<std::string>& group,
                  std::span<const double> covariate);

// D'Agostino-Pearson K^2 omnibus normality test, n >= 20.
TestResult dagostino_pearson(std::span<const double> x);

// Narrowest contiguous interval holding ceil(mass * n) sorted samples.
std::pair<double, double> hdi(std::vector<double> samples, double mass = 0.95);

struct BayesOptions {
    double mass = 0.95;
    std::uint64_t seed = 1;
    int chains = 4;
    int draws = 20000;   // per chain, including burn-in
    int burn_in = 5000;
    double rhat_limit = 1.01;
};

// Posterior mean contrasts for every ordered pair of conditions under a
// shared-sigma normal model: score ~ N(mu_c, sigma), mu_c ~ N(3, 2^2),
// sigma ~ HalfNormal(2), sampled with seeded random-walk Metropolis.
// Throws DomainError when split-Rhat fails the convergence gate.
std::vector<PosteriorContrast> bayes_contrasts(const std::vector<Group>& conditions,
                                               const BayesOptions& options = {});

} // namespace ehk::stats
