#include "doctest.h"

#include <cmath>
#include <deque>

#include "helpers.hpp"
#include "icsdet/simulator.hpp"

using namespace icsdet;

namespace {

PlantParams quiet() {
    PlantParams p;
    p.process_noise_std = 0.0;
    p.sensor_noise_scale = 0.0;
    return p;
}

std::deque<std::vector<double>> scalar_history(std::initializer_list<double> values) {
    std::deque<std::vector<double>> h;
    for (double v : values) h.push_back({v});
    return h;
}

}  // namespace

TEST_CASE("plant fixed point and hand-evaluated step") {
    Rng rng(1);
    PlantState zero;
    auto [s0, m0] = step_plant(zero, 0.0, quiet(), rng);
    CHECK(s0.x == std::vector<double>{0, 0});
    CHECK(m0.y == std::vector<double>{0, 0, 0});

    PlantState st;
    st.x = {4, 1};
    auto [s1, m1] = step_plant(st, 0.0, quiet(), rng);
    CHECK(s1.x[0] == doctest::Approx(3.9).epsilon(1e-12));
    CHECK(s1.x[1] == doctest::Approx(1.05).epsilon(1e-12));
    CHECK(m1.y[2] == doctest::Approx(0.5 * std::sqrt(1.05)).epsilon(1e-12));
    CHECK(s1.k == 1);
}

TEST_CASE("sensor noise is heavy-tailed") {
    PlantParams p;
    p.process_noise_std = 0.0;
    Rng rng(7);
    PlantState st;
    st.x = {4, 4};
    const int n = 10000;
    double s1 = 0, s2 = 0, s4 = 0;
    std::vector<double> v;
    for (int i = 0; i < n; ++i) {
        auto [next, m] = step_plant(st, 0.0, p, rng);
        // Known noiseless level: next.x[0].
        v.push_back(m.y[0] - next.x[0]);
        st.x = {4, 4};
    }
    for (double e : v) s1 += e;
    const double mean = s1 / n;
    for (double e : v) {
        s2 += (e - mean) * (e - mean);
        s4 += std::pow(e - mean, 4);
    }
    const double var = s2 / n;
    const double excess = (s4 / n) / (var * var) - 3.0;
    CHECK(excess > 1.5);
}

TEST_CASE("sensor selection") {
    Rng rng(3);
    auto s = sample_alpha(5, 2, rng);
    CHECK(s.f() == 2);
    CHECK(s.alpha.size() == 5);
    CHECK(sample_alpha(3, 3, rng).alpha == std::vector<std::uint8_t>{1, 1, 1});
    CHECK(error_of([&] { sample_alpha(3, 4, rng); }) == ErrorCode::InvalidF);
    CHECK(error_of([&] { sample_alpha(3, 0, rng); }) == ErrorCode::InvalidF);

    std::vector<int> hits(4, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        auto a = sample_alpha(4, 1, rng);
        for (int j = 0; j < 4; ++j) hits[j] += a.alpha[j];
    }
    const double sigma = std::sqrt(draws * 0.25 * 0.75);
    for (int h : hits) CHECK(std::abs(h - 2500) <= 3 * sigma);
}

TEST_CASE("false data injection") {
    std::vector<double> y{5, 7};
    std::vector<double> bias{2, 9};
    CHECK(apply_fdi(y, {{1, 0}}, bias) == std::vector<double>{7, 7});
    CHECK(apply_fdi(y, {{0, 0}}, bias) == y);
    std::vector<double> ones{1, 1};
    CHECK(apply_fdi(y, {{1, 1}}, ones) == std::vector<double>{6, 8});
}

TEST_CASE("dos stacking") {
    DosProcess proc;
    proc.depth = 2;
    auto h = scalar_history({3, 5, 7});
    auto ch = make_dos_channel(proc, 1);
    std::vector<std::uint8_t> mu{1, 0, 1};
    CHECK(stack_dos(proc, h, mu, ch).stacked == std::vector<double>{3, 0, 7});

    std::vector<std::uint8_t> all{1, 1, 1};
    CHECK(stack_dos(proc, h, all, ch).stacked == std::vector<double>{3, 5, 7});

    proc.p_loss = 1.0;
    Rng rng(2);
    for (int i = 0; i < 20; ++i) CHECK(step_dos(proc, h, ch, rng).mu == std::vector<std::uint8_t>{0, 0, 0});
}

TEST_CASE("hold_last repeats the last delivered value per slot") {
    DosProcess proc;
    proc.depth = 1;
    proc.mode = DosProcess::Mode::HoldLast;
    auto ch = make_dos_channel(proc, 1);
    std::vector<std::uint8_t> ok{1, 1}, lost{0, 0};
    stack_dos(proc, scalar_history({1, 2}), ok, ch);
    CHECK(stack_dos(proc, scalar_history({3, 4}), lost, ch).stacked == std::vector<double>{1, 2});
}

TEST_CASE("markov loss fraction matches the stationary distribution") {
    DosProcess proc;
    proc.kind = DosProcess::Kind::Markov;
    proc.depth = 0;
    proc.p_good_to_bad = 0.2;
    proc.p_bad_to_good = 0.3;
    auto ch = make_dos_channel(proc, 1);
    auto h = scalar_history({1});
    Rng rng(21);
    const int n = 100000;
    int lost = 0;
    for (int i = 0; i < n; ++i) lost += step_dos(proc, h, ch, rng).mu[0] == 0;
    const double pi = 0.2 / 0.5;
    const double lambda = 1.0 - 0.2 - 0.3;
    const double sigma = std::sqrt(pi * (1 - pi) / n * (1 + lambda) / (1 - lambda));
    CHECK(std::abs(lost / double(n) - pi) <= 3 * sigma);
}

TEST_CASE("generated labels follow the schedule") {
    AttackScenario sc;
    sc.horizon = 1000;
    auto clean = generate_dataset(sc);
    CHECK(clean.count_attacks() == 0);
    CHECK(clean.n_features() == 9);
    CHECK(clean.feature_names()[3] == "y1[k-1]");

    sc.schedule = {{100, 200, AttackKind::Fdi}};
    auto one = generate_dataset(sc);
    CHECK(one.count_attacks() == 100);
    for (std::size_t k = 0; k < 1000; ++k) CHECK(one.labels()[k] == (k >= 100 && k < 200 ? 1 : 0));

    // Rows before the episode are identical: attacks draw from their own stream.
    for (std::size_t k = 0; k < 100; ++k) {
        auto a = clean.features().row(k), b = one.features().row(k);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }

    sc.schedule = {{0, 1000, AttackKind::Dos}};
    CHECK(generate_dataset(sc).count_attacks() == 1000);

    sc.dos_stack = false;
    CHECK(generate_dataset(sc).n_features() == 3);
}

TEST_CASE("generation is deterministic and schedules are validated") {
    AttackScenario sc;
    sc.horizon = 500;
    sc.schedule = {{10, 60, AttackKind::Dos}, {100, 150, AttackKind::Fdi}};
    CHECK(generate_dataset(sc) == generate_dataset(sc));
    CHECK(generate_dataset(sc, 500, 1) != generate_dataset(sc, 500, 2));

    sc.schedule = {{10, 60, AttackKind::Dos}, {50, 80, AttackKind::Fdi}};
    CHECK(error_of([&] { generate_dataset(sc); }) == ErrorCode::OverlappingEpisodes);
    sc.schedule = {{450, 501, AttackKind::Dos}};
    CHECK(error_of([&] { generate_dataset(sc); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("plant stays bounded") {
    PlantParams p = quiet();
    PlantState st;
    st.x = {1, 1};
    const auto bound = level_bound(p, st);
    Rng rng(4);
    std::uniform_real_distribution<double> u(p.u_min, p.u_max);
    for (int k = 0; k < 100000; ++k) {
        auto [next, m] = step_plant(st, u(rng), p, rng);
        st = next;
        REQUIRE(st.x[0] >= 0.0);
        REQUIRE(st.x[1] >= 0.0);
        REQUIRE(st.x[0] <= bound[0]);
        REQUIRE(st.x[1] <= bound[1]);
    }
}

TEST_CASE("scenario text round-trips") {
    const char* text =
        "# demo\n"
        "name = demo\nseed = 9\nhorizon = 300\nf = 2\n"
        "dos.kind = markov\ndos.p_good_to_bad = 0.25\ndos.mode = hold_last\n"
        "episode = 10 20 fdi\nepisode = 40 60 dos\n";
    auto sc = parse_scenario(text);
    CHECK(sc.name == "demo");
    CHECK(sc.seed == 9);
    CHECK(sc.f == 2);
    CHECK(sc.dos.kind == DosProcess::Kind::Markov);
    CHECK(sc.dos.mode == DosProcess::Mode::HoldLast);
    REQUIRE(sc.schedule.size() == 2);
    CHECK(count_attack_steps(sc) == 30);

    auto again = parse_scenario(format_scenario(sc));
    CHECK(format_scenario(again) == format_scenario(sc));
    CHECK(generate_dataset(again) == generate_dataset(sc));

    CHECK(error_of([] { parse_scenario("bogus = 1\n"); }) == ErrorCode::ConfigParse);
    CHECK(error_of([] { parse_scenario("seed 4\n"); }) == ErrorCode::ConfigParse);
    CHECK(error_of([] { parse_scenario("episode = 1 2 ddos\n"); }) == ErrorCode::ConfigParse);
    CHECK(error_of([] { parse_scenario("dos.p_loss = 1.5\n"); }) == ErrorCode::ConfigParse);
}

TEST_CASE("reference scenario has the intended imbalance") {
    auto sc = load_scenario(ICSDET_SOURCE_DIR "/scenarios/simics-a.scenario");
    CHECK(sc.name == "simics-a");
    CHECK(sc.seed == 42);
    CHECK(sc.horizon == 20000);
    auto d = generate_dataset(sc);
    const double rate = static_cast<double>(d.count_attacks()) / static_cast<double>(d.n_samples());
    CHECK(std::abs(rate - 0.05) <= 0.005);
}
