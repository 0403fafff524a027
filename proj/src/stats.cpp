#include "ehk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

#include "ehk/distributions.hpp"
#include "ehk/errors.hpp"
#include "ehk/rng.hpp"

namespace ehk::stats {

namespace {

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Midranks over a pooled sample. Returns ranks aligned with the input order
// and the tie term sum(t^3 - t).
std::pair<std::vector<double>, double> midranks(const std::vector<double>& pooled) {
    const std::size_t n = pooled.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
    std::vector<double> ranks(n, 0.0);
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    return {std::move(ranks), tie_term};
}

struct AnovaParts {
    double f = 0.0;
    double ms_within = 0.0;
    int df_between = 0;
    int df_within = 0;
    bool degenerate_zero = false; // no variance anywhere
};

AnovaParts anova_parts(const std::vector<Group>& groups) {
    if (groups.size() < 2) {
        throw DomainError("one_way_anova: need at least 2 groups");
    }
    std::size_t total_n = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.values.size() < 2) {
            throw DomainError("one_way_anova: group '" + g.name + "' has fewer than 2 values");
        }
        total_n += g.values.size();
        for (double x : g.values) grand_sum += x;
    }
    const double grand_mean = grand_sum / static_cast<double>(total_n);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g.values);
        const double nd = static_cast<double>(g.values.size());
        ss_between += nd * (m - grand_mean) * (m - grand_mean);
        for (double x : g.values) ss_within += (x - m) * (x - m);
    }

    AnovaParts parts;
    parts.df_between = static_cast<int>(groups.size()) - 1;
    parts.df_within = static_cast<int>(total_n) - static_cast<int>(groups.size());
    parts.ms_within = ss_within / parts.df_within;
    const double ms_between = ss_between / parts.df_between;
    if (parts.ms_within == 0.0) {
        if (ms_between == 0.0) {
            parts.f = 0.0;
            parts.degenerate_zero = true;
        } else {
            parts.f = std::numeric_limits<double>::infinity();
        }
    } else {
        parts.f = ms_between / parts.ms_within;
    }
    return parts;
}

} // namespace

TestResult one_way_anova(const std::vector<Group>& groups) {
    const AnovaParts parts = anova_parts(groups);
    TestResult r;
    r.test_name = "one_way_anova";
    r.statistic = parts.f;
    r.df = {parts.df_between, parts.df_within};
    if (parts.f == 0.0) {
        r.p_value = 1.0;
    } else if (std::isinf(parts.f)) {
        r.p_value = 0.0;
    } else {
        r.p_value = dist::f_sf(parts.f, parts.df_between, parts.df_within);
    }
    return r;
}

std::vector<TukeyPair> tukey_hsd(const std::vector<Group>& groups, double alpha) {
    const AnovaParts parts = anova_parts(groups);
    const int k = static_cast<int>(groups.size());
    std::vector<TukeyPair> out;
    for (int i = 0; i < k; ++i) {
        for (int j = i + 1; j < k; ++j) {
            TukeyPair pair;
            pair.group_a = groups[i].name;
            pair.group_b = groups[j].name;
            const double mi = mean_of(groups[i].values);
            const double mj = mean_of(groups[j].values);
            pair.mean_diff = mi - mj;
            const double ni = static_cast<double>(groups[i].values.size());
            const double nj = static_cast<double>(groups[j].values.size());
            const double se = std::sqrt(parts.ms_within / 2.0 * (1.0 / ni + 1.0 / nj));
            if (se == 0.0) {
                pair.p_adj = (pair.mean_diff == 0.0) ? 1.0 : 0.0;
            } else {
                const double q = std::fabs(pair.mean_diff) / se;
                pair.p_adj = dist::studentized_range_sf(q, k, parts.df_within);
            }
            pair.reject = pair.p_adj < alpha;
            out.push_back(std::move(pair));
        }
    }
    return out;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw DomainError("paired_t: samples must have equal length");
    }
    const std::size_t n = a.size();
    if (n < 2) {
        throw DomainError("paired_t: need at least 2 pairs");
    }
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const double md = mean_of(d);
    double ss = 0.0;
    for (double x : d) ss += (x - md) * (x - md);
    if (ss == 0.0) {
        throw DomainError("paired_t: differences have zero variance");
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const double t = md / (sd / std::sqrt(static_cast<double>(n)));
    TestResult r;
    r.test_name = "paired_t";
    r.statistic = t;
    r.df = {static_cast<int>(n) - 1};
    r.p_value = dist::t_two_tailed(t, static_cast<double>(n - 1));
    r.extras["mean_diff"] = md;
    return r;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw DomainError("mann_whitney_u: both groups must be nonempty");
    }
    const std::size_t na = a.size(), nb = b.size();
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    auto [ranks, tie_term] = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) rank_sum_a += ranks[i];
    const double u_a = rank_sum_a - static_cast<double>(na) * (na + 1) / 2.0;
    const double u_b = static_cast<double>(na) * static_cast<double>(nb) - u_a;

    TestResult r;
    r.test_name = "mann_whitney_u";
    r.statistic = u_a;
    r.extras["U_a"] = u_a;
    r.extras["U_b"] = u_b;

    const bool has_ties = tie_term > 0.0;
    const double nanb = static_cast<double>(na) * static_cast<double>(nb);
    if (!has_ties && nanb <= 400.0) {
        // Exact null distribution of U by counting rank configurations.
        // f(i, j, u): ways for groups of size i, j with U = u.
        // f(i, j, u) = f(i-1, j, u-j) + f(i, j-1, u)
        const int max_u = static_cast<int>(nanb);
        std::vector<std::vector<std::vector<double>>> f(
            na + 1, std::vector<std::vector<double>>(nb + 1, std::vector<double>(max_u + 1, 0.0)));
        for (std::size_t j = 0; j <= nb; ++j) f[0][j][0] = 1.0;
        for (std::size_t i = 1; i <= na; ++i) {
            for (std::size_t j = 0; j <= nb; ++j) {
                for (int u = 0; u <= max_u; ++u) {
                    double v = 0.0;
                    if (u >= static_cast<int>(j)) v += f[i - 1][j][u - static_cast<int>(j)];
                    if (j >= 1) v += f[i][j - 1][u];
                    f[i][j][u] = v;
                }
            }
        }
        const auto& distu = f[na][nb];
        const double total = std::accumulate(distu.begin(), distu.end(), 0.0);
        const int u_obs = static_cast<int>(std::lround(std::min(u_a, u_b)));
        double cdf = 0.0;
        for (int u = 0; u <= u_obs; ++u) cdf += distu[static_cast<std::size_t>(u)];
        r.p_value = std::min(1.0, 2.0 * cdf / total);
        r.extras["exact"] = 1.0;
    } else {
        const double n_total = static_cast<double>(na + nb);
        const double mean_u = nanb / 2.0;
        const double var_u =
            nanb / 12.0 * ((n_total + 1.0) - tie_term / (n_total * (n_total - 1.0)));
        if (var_u <= 0.0) {
            r.p_value = 1.0; // everything tied
        } else {
            const double cc = 0.5; // continuity correction toward the mean
            const double num = std::fabs(u_a - mean_u);
            const double z = (num > cc ? num - cc : 0.0) / std::sqrt(var_u);
            r.p_value = std::min(1.0, 2.0 * dist::normal_sf(z));
            r.extras["z"] = z;
        }
        r.extras["exact"] = 0.0;
    }
    return r;
}

double binomial_two_tailed(int k, int n, double p0) {
    if (k < 0 || n < 0 || k > n) {
        throw DomainError("binomial_two_tailed: require 0 <= k <= n");
    }
    if (!(p0 > 0.0) || !(p0 < 1.0)) {
        throw DomainError("binomial_two_tailed: require 0 < p0 < 1");
    }
    auto log_pmf = [&](int i) {
        return std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) +
               i * std::log(p0) + (n - i) * std::log1p(-p0);
    };
    const double ref = log_pmf(k);
    // relative slack absorbs lgamma rounding when point probabilities tie
    const double cutoff = ref + 1e-9;
    double p = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double lp = log_pmf(i);
        if (lp <= cutoff) p += std::exp(lp);
    }
    return std::min(1.0, p);
}

TestResult friedman(const std::vector<std::vector<double>>& matrix) {
    const std::size_t n = matrix.size();
    if (n < 2) {
        throw DomainError("friedman: need at least 2 subjects");
    }
    const std::size_t k = matrix.front().size();
    if (k < 2) {
        throw DomainError("friedman: need at least 2 conditions");
    }
    for (const auto& row : matrix) {
        if (row.size() != k) {
            throw DomainError("friedman: incomplete matrix (every subject needs every condition)");
        }
    }
    std::vector<double> rank_sums(k, 0.0);
    double tie_sum = 0.0;
    for (const auto& row : matrix) {
        auto [ranks, tie_term] = midranks(row);
        tie_sum += tie_term;
        for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
    }
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    double sum_r2 = 0.0;
    for (double rj : rank_sums) sum_r2 += rj * rj;
    double stat = 12.0 / (nd * kd * (kd + 1.0)) * sum_r2 - 3.0 * nd * (kd + 1.0);
    const double correction = 1.0 - tie_sum / (nd * kd * (kd * kd - 1.0));

    TestResult r;
    r.test_name = "friedman";
    r.df = {static_cast<int>(k) - 1};
    if (correction <= 0.0) {
        // every condition tied within every subject
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    stat /= correction;
    if (stat < 0.0 && stat > -1e-9) stat = 0.0;
    r.statistic = stat;
    r.p_value = (stat <= 0.0) ? 1.0 : dist::chi2_sf(stat, kd - 1.0);
    return r;
}

TestResult ancova(std::span<const double> post,
                  const std::vector<std::string>& group,
                  std::span<const double> covariate) {
    const std::size_t n = post.size();
    if (group.size() != n || covariate.size() != n) {
        throw DomainError("ancova: inputs must have equal length");
    }
    std::vector<std::string> levels;
    for (const auto& g : group) {
        if (std::find(levels.begin(), levels.end(), g) == levels.end()) levels.push_back(g);
    }
    const std::size_t k = levels.size();
    if (k < 2) {
        throw DomainError("ancova: need at least 2 groups");
    }
    if (n < k + 2) {
        throw DomainError("ancova: not enough observations");
    }

    // Full design: intercept, k-1 group dummies, covariate.
    Eigen::MatrixXd X_full(n, k + 1);
    Eigen::MatrixXd X_reduced(n, 2);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        y(static_cast<Eigen::Index>(i)) = post[i];
        X_full(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 1; j < k; ++j) {
            X_full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                (group[i] == levels[j]) ? 1.0 : 0.0;
        }
        X_full(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = covariate[i];
        X_reduced(static_cast<Eigen::Index>(i), 0) = 1.0;
        X_reduced(static_cast<Eigen::Index>(i), 1) = covariate[i];
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_full(X_full);
    if (qr_full.rank() < static_cast<Eigen::Index>(k + 1)) {
        throw DomainError("ancova: singular design (is the covariate constant?)");
    }
    const Eigen::VectorXd resid_full = y - X_full * qr_full.solve(y);
    const double sse_full = resid_full.squaredNorm();

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_red(X_reduced);
    const Eigen::VectorXd resid_red = y - X_reduced * qr_red.solve(y);
    const double sse_red = resid_red.squaredNorm();

    const int df1 = static_cast<int>(k) - 1;
    const int df2 = static_cast<int>(n) - static_cast<int>(k) - 1;
    TestResult r;
    r.test_name = "ancova";
    r.df = {df1, df2};
    r.extras["sse_full"] = sse_full;
    r.extras["sse_reduced"] = sse_red;
    if (sse_full == 0.0) {
        r.statistic = (sse_red == sse_full) ? 0.0 : std::numeric_limits<double>::infinity();
        r.p_value = (sse_red == sse_full) ? 1.0 : 0.0;
        return r;
    }
    r.statistic = ((sse_red - sse_full) / df1) / (sse_full / df2);
    if (r.statistic < 0.0 && r.statistic > -1e-12) r.statistic = 0.0;
    r.p_value = (r.statistic <= 0.0) ? 1.0 : dist::f_sf(r.statistic, df1, df2);
    return r;
}

TestResult dagostino_pearson(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 20) {
        throw DomainError("dagostino_pearson: need n >= 20");
    }
    const double nd = static_cast<double>(n);
    const double m = mean_of(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    if (m2 == 0.0) {
        throw DomainError("dagostino_pearson: zero variance");
    }

    // skewness z-score
    const double b1 = m3 / std::pow(m2, 1.5);
    const double y = b1 * std::sqrt((nd + 1.0) * (nd + 3.0) / (6.0 * (nd - 2.0)));
    const double beta2 = 3.0 * (nd * nd + 27.0 * nd - 70.0) * (nd + 1.0) * (nd + 3.0) /
                         ((nd - 2.0) * (nd + 5.0) * (nd + 7.0) * (nd + 9.0));
    const double w2 = -1.0 + std::sqrt(2.0 * (beta2 - 1.0));
    const double delta = 1.0 / std::sqrt(0.5 * std::log(w2));
    const double alpha = std::sqrt(2.0 / (w2 - 1.0));
    const double ya = (y == 0.0) ? 0.0 : y / alpha;
    const double z1 = delta * std::log(ya + std::sqrt(ya * ya + 1.0));

    // kurtosis z-score
    const double b2 = m4 / (m2 * m2);
    const double eb2 = 3.0 * (nd - 1.0) / (nd + 1.0);
    const double vb2 = 24.0 * nd * (nd - 2.0) * (nd - 3.0) /
                       ((nd + 1.0) * (nd + 1.0) * (nd + 3.0) * (nd + 5.0));
    const double xk = (b2 - eb2) / std::sqrt(vb2);
    const double sqrtbeta1 = 6.0 * (nd * nd - 5.0 * nd + 2.0) / ((nd + 7.0) * (nd + 9.0)) *
                             std::sqrt(6.0 * (nd + 3.0) * (nd + 5.0) / (nd * (nd - 2.0) * (nd - 3.0)));
    const double a = 6.0 + 8.0 / sqrtbeta1 *
                               (2.0 / sqrtbeta1 + std::sqrt(1.0 + 4.0 / (sqrtbeta1 * sqrtbeta1)));
    const double term1 = 1.0 - 2.0 / (9.0 * a);
    const double denom = 1.0 + xk * std::sqrt(2.0 / (a - 4.0));
    const double term2 = std::copysign(std::cbrt((1.0 - 2.0 / a) / std::fabs(denom)), denom);
    const double z2 = (term1 - term2) / std::sqrt(2.0 / (9.0 * a));

    TestResult r;
    r.test_name = "dagostino_pearson";
    r.statistic = z1 * z1 + z2 * z2;
    r.df = {2};
    r.p_value = dist::chi2_sf(r.statistic, 2.0);
    r.extras["z_skew"] = z1;
    r.extras["z_kurtosis"] = z2;
    return r;
}

std::pair<double, double> hdi(std::vector<double> samples, double mass) {
    if (samples.size() < 100) {
        throw DomainError("hdi: need at least 100 samples");
    }
    if (!(mass > 0.0) || !(mass < 1.0)) {
        throw DomainError("hdi: mass must be in (0, 1)");
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    std::size_t m = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n)));
    if (m < 2) m = 2;
    if (m > n) m = n;
    std::size_t best = 0;
    double best_width = samples[m - 1] - samples[0];
    for (std::size_t i = 1; i + m <= n; ++i) {
        const double width = samples[i + m - 1] - samples[i];
        if (width < best_width) {
            best_width = width;
            best = i;
        }
    }
    return {samples[best], samples[best + m - 1]};
}

namespace {

struct SufficientStats {
    double n = 0.0;
    double sum = 0.0;
    double sum_sq = 0.0;
};

struct BayesModel {
    std::vector<SufficientStats> stats;

    // log posterior over (mu_1..mu_k, log_sigma), flat in the Jacobian sense
    // for sigma = exp(log_sigma).
    double log_post(const std::vector<double>& mu, double log_sigma) const {
        const double sigma = std::exp(log_sigma);
        const double sigma2 = sigma * sigma;
        double lp = 0.0;
        for (std::size_t c = 0; c < stats.size(); ++c) {
            const auto& s = stats[c];
            const double rss = s.sum_sq - 2.0 * mu[c] * s.sum + s.n * mu[c] * mu[c];
            lp += -0.5 * s.n * std::log(2.0 * 3.14159265358979323846 * sigma2) -
                  rss / (2.0 * sigma2);
            // mu_c ~ N(3, 2^2)
            lp += -0.5 * (mu[c] - 3.0) * (mu[c] - 3.0) / 4.0;
        }
        // sigma ~ HalfNormal(2), plus the log-sigma Jacobian
        lp += -sigma2 / 8.0 + log_sigma;
        return lp;
    }
};

// Split-Rhat over per-chain draws of one parameter.
double split_rhat(const std::vector<std::vector<double>>& chains) {
    std::vector<std::vector<double>> halves;
    for (const auto& c : chains) {
        const std::size_t h = c.size() / 2;
        halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
        halves.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(h), c.end());
    }
    const double m = static_cast<double>(halves.size());
    const double len = static_cast<double>(halves.front().size());
    std::vector<double> means;
    double grand = 0.0;
    double w = 0.0;
    for (const auto& h : halves) {
        const double mu = mean_of(h);
        means.push_back(mu);
        grand += mu;
        double var = 0.0;
        for (double v : h) var += (v - mu) * (v - mu);
        w += var / (len - 1.0);
    }
    grand /= m;
    w /= m;
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    b *= len / (m - 1.0);
    if (w <= 0.0) return 1.0;
    const double var_plus = (len - 1.0) / len * w + b / len;
    return std::sqrt(var_plus / w);
}

} // namespace

std::vector<PosteriorContrast> bayes_contrasts(const std::vector<Group>& conditions,
                                               const BayesOptions& options) {
    if (conditions.size() < 2) {
        throw DomainError("bayes_contrasts: need at least 2 conditions");
    }
    for (const auto& c : conditions) {
        if (c.values.size() < 2) {
            throw DomainError("bayes_contrasts: condition '" + c.name +
                              "' has fewer than 2 observations");
        }
    }
    if (options.burn_in >= options.draws) {
        throw DomainError("bayes_contrasts: burn_in must be smaller than draws");
    }

    const std::size_t k = conditions.size();
    BayesModel model;
    double pooled_ss = 0.0, pooled_n = 0.0;
    std::vector<double> data_means(k);
    for (std::size_t c = 0; c < k; ++c) {
        SufficientStats s;
        s.n = static_cast<double>(conditions[c].values.size());
        for (double v : conditions[c].values) {
            s.sum += v;
            s.sum_sq += v * v;
        }
        model.stats.push_back(s);
        data_means[c] = s.sum / s.n;
        pooled_ss += s.sum_sq - s.sum * s.sum / s.n;
        pooled_n += s.n;
    }
    double sigma_hat = std::sqrt(std::max(pooled_ss / std::max(1.0, pooled_n - static_cast<double>(k)), 1e-12));

    // One vector of kept draws per chain per parameter (mu only).
    std::vector<std::vector<std::vector<double>>> kept(
        k, std::vector<std::vector<double>>(static_cast<std::size_t>(options.chains)));

    for (int chain = 0; chain < options.chains; ++chain) {
        Rng rng(options.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(chain) + 1);
        std::vector<double> mu = data_means;
        double log_sigma = std::log(sigma_hat);
        // slight chain dispersion in the start points
        for (std::size_t c = 0; c < k; ++c) mu[c] += 0.1 * sigma_hat * rng.next_normal();

        std::vector<double> mu_step(k);
        for (std::size_t c = 0; c < k; ++c) {
            mu_step[c] = std::max(2.4 * sigma_hat / std::sqrt(model.stats[c].n), 1e-4);
        }
        double ls_step = std::max(2.4 / std::sqrt(2.0 * pooled_n), 1e-3);

        double lp = model.log_post(mu, log_sigma);
        const int adapt_until = options.burn_in / 2;
        std::vector<int> mu_accepts(k, 0);
        int ls_accepts = 0;

        for (int it = 0; it < options.draws; ++it) {
            for (std::size_t c = 0; c < k; ++c) {
                const double old = mu[c];
                mu[c] = old + mu_step[c] * rng.next_normal();
                const double lp_new = model.log_post(mu, log_sigma);
                if (std::log(std::max(rng.next_unit(), 1e-300)) < lp_new - lp) {
                    lp = lp_new;
                    ++mu_accepts[c];
                } else {
                    mu[c] = old;
                }
            }
            {
                const double old = log_sigma;
                log_sigma = old + ls_step * rng.next_normal();
                const double lp_new = model.log_post(mu, log_sigma);
                if (std::log(std::max(rng.next_unit(), 1e-300)) < lp_new - lp) {
                    lp = lp_new;
                    ++ls_accepts;
                } else {
                    log_sigma = old;
                }
            }

            // crude step adaptation during the first half of burn-in
            if (it < adapt_until && (it + 1) % 100 == 0) {
                for (std::size_t c = 0; c < k; ++c) {
                    const double rate = mu_accepts[c] / 100.0;
                    mu_step[c] *= (rate > 0.5) ? 1.2 : (rate < 0.25 ? 0.8 : 1.0);
                    mu_accepts[c] = 0;
                }
                const double rate = ls_accepts / 100.0;
                ls_step *= (rate > 0.5) ? 1.2 : (rate < 0.25 ? 0.8 : 1.0);
                ls_accepts = 0;
            }

            if (it >= options.burn_in) {
                for (std::size_t c = 0; c < k; ++c) {
                    kept[c][static_cast<std::size_t>(chain)].push_back(mu[c]);
                }
            }
        }
    }

    // convergence gate
    for (std::size_t c = 0; c < k; ++c) {
        const double rhat = split_rhat(kept[c]);
        if (!(rhat < options.rhat_limit)) {
            std::ostringstream msg;
            msg << "bayes_contrasts: chains did not converge for '" << conditions[c].name
                << "' (split-Rhat " << rhat << " >= " << options.rhat_limit << ")";
            throw DomainError(msg.str());
        }
    }

    // merge by chain index
    std::vector<std::vector<double>> draws(k);
    for (std::size_t c = 0; c < k; ++c) {
        for (int chain = 0; chain < options.chains; ++chain) {
            const auto& src = kept[c][static_cast<std::size_t>(chain)];
            draws[c].insert(draws[c].end(), src.begin(), src.end());
        }
    }

    std::vector<PosteriorContrast> out;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            if (a == b) continue;
            std::vector<double> diff(draws[a].size());
            std::size_t gt = 0;
            double sum = 0.0;
            for (std::size_t i = 0; i < diff.size(); ++i) {
                diff[i] = draws[a][i] - draws[b][i];
                sum += diff[i];
                if (diff[i] > 0.0) ++gt;
            }
            PosteriorContrast pc;
            pc.label = conditions[a].name + " - " + conditions[b].name;
            pc.mean = sum / static_cast<double>(diff.size());
            pc.prob_gt_zero = static_cast<double>(gt) / static_cast<double>(diff.size());
            pc.mass = options.mass;
            auto [lo, hi] = hdi(std::move(diff), options.mass);
            pc.hdi_low = lo;
            pc.hdi_high = hi;
            out.push_back(std::move(pc));
        }
    }
    return out;
}

} // namespace ehk::stats
