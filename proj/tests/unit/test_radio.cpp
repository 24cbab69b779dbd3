#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "gmarl/error.hpp"
#include "gmarl/radio_env.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace gmarl;
namespace gt = gmarl::testing;

TEST_CASE("path loss") {
    RadioParams r;
    const double dz = r.bs_height_m - r.ue_height_m;
    const double d2 = std::sqrt(100.0 * 100.0 - dz * dz);
    CHECK(path_loss_db(d2, r) == doctest::Approx(83.3641).epsilon(1e-5));
    const double d2b = std::sqrt(200.0 * 200.0 - dz * dz);
    CHECK(path_loss_db(d2b, r) - path_loss_db(d2, r) == doctest::Approx(22.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(breakpoint_distance_m(r) == doctest::Approx(4 * 24 * 0.5 * 3.7e9 / kSpeedOfLight));
    CHECK(path_loss_db(0.2, r) == path_loss_db(1.0, r));
    double prev = -1e9;
    for (double d = 1.0; d < 5000.0; d *= 1.03) {
        const double pl = path_loss_db(d, r);
        CHECK(pl >= prev);
        CHECK(pl == doctest::Approx(gt::oracle_path_loss(d, r)).epsilon(1e-12));
        prev = pl;
    }
}

TEST_CASE("M-QAM bit error rate") {
    CHECK(ber_mqam(2, 0.0) == 0.5);
    CHECK(ber_mqam(4, 0.0) == doctest::Approx(0.5 * 0.75));
    CHECK(ber_mqam(2, 10.0) == doctest::Approx(0.5 * std::erfc(std::sqrt(5.0))).epsilon(1e-12));
    CHECK(ber_mqam(2, 10.0) == doctest::Approx(7.83e-4).epsilon(1e-3));
    CHECK(ber_mqam(16, 1e6) < 1e-300);
    CHECK_THROWS_AS(ber_mqam(2, -1.0), DomainError);
    for (int L : {2, 4, 8, 16}) {
        double prev = 1.0;
        for (double g = 0.01; g < 1e3; g *= 1.2) {
            const double b = ber_mqam(L, g);
            CHECK(b < prev);
            prev = b;
        }
    }
    // Higher orders are worse once the SINR is past a few units.
    for (double g = 5.0; g < 50.0; g += 1.0) {
        CHECK(ber_mqam(4, g) > ber_mqam(2, g));
        CHECK(ber_mqam(8, g) > ber_mqam(4, g));
        CHECK(ber_mqam(16, g) > ber_mqam(8, g));
    }
}

TEST_CASE("MCS selection") {
    const std::vector<int> orders{4, 16, 64, 256};
    CHECK(select_mcs(0.0, 0.2, orders) == 0.0);
    CHECK(select_mcs(0.0, 1e-3, orders) == 0.0);
    CHECK(select_mcs(1e12, 1e-5, orders) == 8.0);
    const double g15 = std::pow(10.0, 1.5);
    CHECK(select_mcs(g15, 1e-3, orders) == gt::oracle_eta(g15, 1e-3, orders));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> db(-10, 40), lt(-7, -1);
    for (int i = 0; i < 2000; ++i) {
        const double g = std::pow(10.0, db(rng) / 10.0), t = std::pow(10.0, lt(rng));
        CHECK(select_mcs(g, t, orders) == gt::oracle_eta(g, t, orders));
    }
}

TEST_CASE("noise and SINR") {
    RadioParams r;
    CHECK(watt_to_dbm(noise_power_w(r)) == doctest::Approx(-174 + 10 * std::log10(60e6) + 9).epsilon(1e-12));
    NetworkTopology one;
    one.positions = {{0, 0}};
    one.bounds = {-1000, -1000, 1000, 1000};
    UserSet users(1);
    users[0].position = {300, 0};
    const PowerLevels pw;
    const std::vector<std::size_t> l{4};
    const auto a = make_action(l, pw);
    assign_serving(users, one, a, r);
    compute_sinr(users, one, a, r);
    CHECK(users[0].sinr == doctest::Approx(rx_power_w(46, 300, r) / noise_power_w(r)).epsilon(1e-12));

    NetworkTopology two;
    two.positions = {{-200, 0}, {200, 0}};
    two.bounds = one.bounds;
    users[0].position = {0, 0};
    const std::vector<std::size_t> l2{2, 2};
    const auto a2 = make_action(l2, pw);
    assign_serving(users, two, a2, r);
    compute_sinr(users, two, a2, r);
    CHECK(users[0].serving_cell == 0);
    const double p = rx_power_w(40, 200, r);
    CHECK(users[0].sinr == doctest::Approx(p / (p + noise_power_w(r))).epsilon(1e-12));
    CHECK(users[0].sinr < 1.0);
}

TEST_CASE("user sampling") {
    NetworkTopology t;
    t.positions = {{0, 0}, {1000, 0}};
    t.bounds = {-2000, -2000, 3000, 2000};
    const auto cats = default_categories();
    CHECK(sample_users(t, cats, TrafficIntensity::uniform(2, 3, 0.0), 600, 1).empty());

    TrafficIntensity lam = TrafficIntensity::uniform(2, 3, 0.0);
    lam.at(0, 0) = 5.0;
    double total = 0.0;
    const int n = 10000;
    for (int s = 0; s < n; ++s) {
        const auto u = sample_users(t, cats, lam, 600, std::uint64_t(s));
        total += double(u.size());
        for (const auto& x : u) {
            CHECK(x.parent_cell == 0);
            CHECK(x.category == 0);
            CHECK(distance(x.position, t.positions[0]) <= 600.0);
        }
    }
    CHECK(total / n >= 4.9);
    CHECK(total / n <= 5.1);

    lam.at(1, 2) = 3.0;
    const auto a = sample_users(t, cats, lam, 600, 77);
    const auto b = sample_users(t, cats, lam, 600, 77);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].position == b[i].position);
}

TEST_CASE("step examples") {
    RadioParams r;
    const auto cats = default_categories();
    NetworkTopology one;
    one.positions = {{0, 0}};
    one.bounds = {-1000, -1000, 1000, 1000};
    const PowerLevels pw;
    const std::vector<std::size_t> l{4};
    CHECK(step(one, {}, make_action(l, pw), r, cats).reward_bps == 0.0);
    CHECK(step(one, {}, make_action(l, pw), r, cats).normalized_reward == 0.0);

    UserSet u(1);
    u[0].position = {200, 100};
    u[0].category = 1;
    const auto res = step(one, u, make_action(l, pw), r, cats);
    const double g = rx_power_w(46, std::hypot(200, 100), r) / noise_power_w(r);
    CHECK(res.reward_bps == doctest::Approx(select_mcs(g, 1e-3, r.mcs_orders) * r.bandwidth_hz));
    CHECK(res.normalized_reward == doctest::Approx(res.reward_bps / (r.bandwidth_hz * 8.0)));
}

TEST_CASE("step matches the brute-force oracle on small instances") {
    RadioParams r;
    const auto cats = default_categories();
    std::vector<double> targets;
    for (const auto& c : cats) targets.push_back(c.ber_target);
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> coord(-900, 900);
    std::uniform_int_distribution<std::size_t> cat(0, 2);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t m = 1 + trial % 3;
        const std::size_t levels = 1 + (trial / 3) % 3;
        const std::size_t nu = trial % 6;
        NetworkTopology t;
        t.bounds = {-1000, -1000, 1000, 1000};
        for (std::size_t i = 0; i < m; ++i) t.positions.push_back({coord(rng), coord(rng)});
        PowerLevels pw;
        pw.dbm.assign(pw.dbm.begin(), pw.dbm.begin() + long(levels));
        UserSet users(nu);
        std::vector<Point> up;
        std::vector<std::size_t> uc;
        for (auto& x : users) {
            x.position = {coord(rng), coord(rng)};
            x.category = cat(rng);
            up.push_back(x.position);
            uc.push_back(x.category);
        }
        std::size_t joint = 1;
        for (std::size_t i = 0; i < m; ++i) joint *= levels;
        for (std::size_t code = 0; code < joint; ++code) {
            std::vector<std::size_t> lv(m);
            std::size_t c = code;
            for (std::size_t i = 0; i < m; ++i) {
                lv[i] = c % levels;
                c /= levels;
            }
            const auto a = make_action(lv, pw);
            const auto got = step(t, users, a, r, cats);
            const auto want = gt::oracle_step(t.positions, up, uc, a.tx_dbm, r, targets);
            CHECK(got.reward_bps == doctest::Approx(want.reward_bps).epsilon(1e-9));
            for (std::size_t l = 0; l < nu; ++l) CHECK(got.users[l].serving_cell == want.serving[l]);
            std::size_t total = 0;
            for (auto n : got.cell_load) total += n;
            CHECK(total == nu);
        }
    }
}

TEST_CASE("reward is invariant under relabelling base stations") {
    RadioParams r;
    const auto cats = default_categories();
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> coord(-1500, 1500);
    const PowerLevels pw;
    for (int trial = 0; trial < 20; ++trial) {
        NetworkTopology t;
        t.bounds = {-2000, -2000, 2000, 2000};
        for (int i = 0; i < 4; ++i) t.positions.push_back({coord(rng), coord(rng)});
        UserSet users(8);
        for (std::size_t i = 0; i < users.size(); ++i) {
            users[i].position = {coord(rng), coord(rng)};
            users[i].category = i % 3;
        }
        std::vector<std::size_t> lv{0, 2, 4, 1};
        std::vector<std::size_t> perm{2, 0, 3, 1};
        NetworkTopology tp = t;
        std::vector<std::size_t> lp(4);
        for (std::size_t i = 0; i < 4; ++i) {
            tp.positions[i] = t.positions[perm[i]];
            lp[i] = lv[perm[i]];
        }
        const double a = step(t, users, make_action(lv, pw), r, cats).reward_bps;
        const double b = step(tp, users, make_action(lp, pw), r, cats).reward_bps;
        CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
}

TEST_CASE("raising power never lowers own received power") {
    RadioParams r;
    for (double d = 10; d < 3000; d += 97)
        for (double p = 30; p < 46; p += 1) CHECK(rx_power_w(p + 1, d, r) > rx_power_w(p, d, r));
}

TEST_CASE("observation tensor") {
    NetworkTopology t;
    t.positions = {{0, 0}};
    t.bounds = {-2000, -2000, 2000, 2000};
    const GridSpec grid;
    auto obs = observe(t, {}, grid, 3);
    CHECK(obs[0].total() == 0.0);

    const double ring = grid.max_radius_m / grid.distance_bins;
    const double sector = 2 * std::numbers::pi / grid.angle_bins;
    UserSet u(1);
    u[0].category = 1;
    const double rad = 1.5 * ring, phi = 3.5 * sector;
    u[0].position = {rad * std::cos(phi), rad * std::sin(phi)};
    obs = observe(t, u, grid, 3);
    CHECK(obs[0].at(1, 3, 1) == 1.0);
    CHECK(obs[0].total() == 1.0);

    u[0].position = {2000, 0};
    CHECK(observe(t, u, grid, 3)[0].total() == 0.0);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> rr(10, 1490), aa(0, 2 * std::numbers::pi);
    UserSet many(40);
    UserSet rotated(40);
    for (std::size_t i = 0; i < many.size(); ++i) {
        // Keep users off sector boundaries so rotation does not move them across one.
        const double a = (std::floor(aa(rng) / sector) + 0.5) * sector;
        const double d = rr(rng);
        many[i].category = i % 3;
        rotated[i].category = i % 3;
        many[i].position = {d * std::cos(a), d * std::sin(a)};
        rotated[i].position = {d * std::cos(a + sector), d * std::sin(a + sector)};
    }
    const auto o1 = observe(t, many, grid, 3)[0];
    const auto o2 = observe(t, rotated, grid, 3)[0];
    for (std::size_t d = 0; d < grid.distance_bins; ++d)
        for (std::size_t a = 0; a < grid.angle_bins; ++a)
            for (std::size_t k = 0; k < 3; ++k) CHECK(o2.at(d, (a + 1) % grid.angle_bins, k) == o1.at(d, a, k));

    const auto x = node_features(observe(t, many, grid, 3), 0.5);
    CHECK(x.shape() == Shape{1, grid.distance_bins * grid.angle_bins * 3});
}

TEST_CASE("category profiles") {
    auto c = default_categories();
    CHECK(c.size() == 3);
    CHECK_NOTHROW(validate_categories(c));
    c[2].ber_target = c[1].ber_target;
    CHECK_THROWS_AS(validate_categories(c), ConfigError);
}
