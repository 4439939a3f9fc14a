#include <dynrisk/error.hpp>
#include <dynrisk/metrics.hpp>

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace dynrisk;

namespace {

struct Set {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
};

Set random_set(std::uint64_t seed, bool allow_ties) {
    std::mt19937_64 rng{seed};
    std::uniform_int_distribution<int> size{2, 200};
    std::uniform_int_distribution<int> coarse{0, 9};
    std::normal_distribution<double> z;
    Set s;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
        s.labels.push_back(static_cast<std::uint8_t>(rng() % 2));
        s.scores.push_back(allow_ties ? coarse(rng) * 0.1 : z(rng));
    }
    s.labels[0] = 0;
    s.labels[1] = 1;
    return s;
}

} // namespace

TEST_CASE("reference AUC values") {
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    CHECK(roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y).auc == 0.75);
    CHECK(roc_curve(std::vector<double>{0.1, 0.2, 0.3, 0.4}, y).auc == 1.0);
    CHECK(roc_curve(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y).auc == 0.5);
    const std::vector<std::uint8_t> two{0, 1};
    CHECK(auc_pair_oracle(std::vector<double>{0.3, 0.3}, two) == 0.5);
}

TEST_CASE("roc curve shape") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    const auto c = roc_curve(s, y);
    REQUIRE(c.points.size() == 5);
    CHECK(c.points.front().fpr == 0.0);
    CHECK(c.points.front().tpr == 0.0);
    CHECK(std::isinf(c.points.front().threshold));
    CHECK(c.points.back().fpr == 1.0);
    CHECK(c.points.back().tpr == 1.0);
    CHECK_THROWS_AS(roc_curve(s, std::vector<std::uint8_t>{1, 1, 1, 1}), DomainError);
    CHECK_THROWS_AS(roc_curve(s, std::vector<std::uint8_t>{1, 0}), DomainError);
    CHECK_THROWS_AS(roc_curve(std::vector<double>{NAN, 1.0}, std::vector<std::uint8_t>{1, 0}), DomainError);
}

TEST_CASE("property: trapezoid AUC equals the pair-counting oracle") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const auto s = random_set(seed, seed % 2 == 0);
        const auto c = roc_curve(s.scores, s.labels);
        CHECK(std::abs(c.auc - auc_pair_oracle(s.scores, s.labels)) <= 1e-12);
        for (std::size_t k = 1; k < c.points.size(); ++k) {
            CHECK(c.points[k].fpr >= c.points[k - 1].fpr);
            CHECK(c.points[k].tpr >= c.points[k - 1].tpr);
            CHECK(c.points[k].threshold < c.points[k - 1].threshold);
        }
    }
}

TEST_CASE("property: AUC invariant under increasing transforms, complemented by negation") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto s = random_set(seed + 5000, seed % 3 == 0);
        const double base = roc_curve(s.scores, s.labels).auc;
        std::vector<double> t, neg;
        for (double v : s.scores) {
            t.push_back(std::exp(3.0 * v) + v);
            neg.push_back(-v);
        }
        CHECK(roc_curve(t, s.labels).auc == base);
        CHECK(std::abs(roc_curve(neg, s.labels).auc - (1.0 - base)) <= 1e-12);
    }
}

TEST_CASE("f-beta") {
    CHECK(f_beta(0.5, 0.5, 1.0) == doctest::Approx(0.5));
    CHECK(f_beta(1.0, 0.0, 1.0) == 0.0);
    CHECK(f_beta(0.0, 0.0, 2.0) == 0.0);
    CHECK(f_beta(0.6, 0.9, 2.0) == doctest::Approx(2.7 / 3.3).epsilon(1e-12));
    CHECK(std::abs(f_beta(0.6, 0.9, 2.0) - 0.81818) < 1e-5);
    std::mt19937_64 rng{1};
    std::uniform_real_distribution<double> u{0.01, 1.0};
    for (int k = 0; k < 200; ++k) {
        const double p = u(rng), r = u(rng);
        CHECK(f_beta(p, r, 1.0) == doctest::Approx(f_beta(r, p, 1.0)).epsilon(1e-14));
        CHECK(std::abs(f_beta(p, r, 1e-3) - p) < 1e-3);
        CHECK(std::abs(f_beta(p, r, 1e3) - r) < 1e-3);
    }
}

TEST_CASE("f-beta curve") {
    const std::vector<double> s{0.1, 0.4, 0.35, 0.8};
    const std::vector<std::uint8_t> y{0, 0, 1, 1};
    const auto curve = f_beta_curve(s, y);
    CHECK(curve.betas == std::vector<double>{0.5, 1, 2, 3, 5});
    REQUIRE(curve.per_beta.size() == 5);
    const auto &beta1 = curve.per_beta[1].second;
    REQUIRE(beta1.size() == 4);
    // threshold 0.35: predicted positive {0.35, 0.4, 0.8}: TP 2, FP 1
    const auto it = std::find_if(beta1.begin(), beta1.end(), [](auto &p) { return p.threshold == 0.35; });
    REQUIRE(it != beta1.end());
    CHECK(it->precision == doctest::Approx(2.0 / 3.0));
    CHECK(it->recall == 1.0);
    std::ostringstream out;
    write_fbeta_csv(out, curve);
    CHECK(out.str().rfind("beta,threshold,precision,recall,f_score\n", 0) == 0);
}
