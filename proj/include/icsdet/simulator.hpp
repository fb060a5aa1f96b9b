#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icsdet/dataset.hpp"
#include "icsdet/rng.hpp"

namespace icsdet {

// Two-tank cascade with square-root outflow:
//   x1' = x1 + dt (u - a1 sqrt(x1)) + w1
//   x2' = x2 + dt (a1 sqrt(x1) - a2 sqrt(x2)) + w2
// observed as y = (x1, x2, a2 sqrt(x2)) + v, with w truncated Gaussian (3
// sigma) and v Laplace. Levels are clamped at 0.
struct PlantParams {
    double a1 = 0.5;
    double a2 = 0.5;
    double dt = 0.1;
    double process_noise_std = 0.01;
    double sensor_noise_scale = 0.05;  // Laplace scale b
    double u_min = 0.6;
    double u_max = 1.4;
    std::size_t inflow_period = 400;   // steps between inflow setpoint changes
    double level_capacity = 10.0;      // nominal sensor range of the tank levels
};

inline constexpr std::size_t kPlantStates = 2;
inline constexpr std::size_t kPlantSensors = 3;

struct PlantState {
    std::vector<double> x = std::vector<double>(kPlantStates, 0.0);
    std::uint64_t k = 0;
};

enum class AttackKind : std::uint8_t { None = 0, Fdi = 1, Dos = 2 };

struct Measurement {
    std::vector<double> y;
    std::uint64_t k = 0;
    AttackKind attack_kind = AttackKind::None;

    bool is_attack() const noexcept { return attack_kind != AttackKind::None; }
};

std::pair<PlantState, Measurement> step_plant(const PlantState& state, double inflow,
                                              const PlantParams& params, Rng& rng);

// Nominal full-scale range of each sensor, used to size FDI biases.
std::vector<double> sensor_ranges(const PlantParams& params);

// Upper bound on the noiseless levels reachable from `initial` with inflow
// never exceeding u_max.
std::vector<double> level_bound(const PlantParams& params, const PlantState& initial);

struct SensorSelection {
    std::vector<std::uint8_t> alpha;
    std::size_t f() const;
};

SensorSelection sample_alpha(std::size_t m, std::size_t f, Rng& rng);
std::vector<double> apply_fdi(std::span<const double> y, const SensorSelection& selection,
                              std::span<const double> bias);

struct DosProcess {
    enum class Kind { Bernoulli, Markov };
    enum class Mode { Zeroing, HoldLast };

    Kind kind = Kind::Bernoulli;
    double p_loss = 0.5;
    double p_good_to_bad = 0.1;
    double p_bad_to_good = 0.1;
    std::size_t depth = 2;  // d: the stack carries z_k ... z_{k-d}
    Mode mode = Mode::Zeroing;
};

// Per-slot channel memory: Markov chain state and the last delivered value
// (for hold_last).
struct DosChannel {
    std::vector<std::uint8_t> bad;
    std::vector<std::vector<double>> held;
};

DosChannel make_dos_channel(const DosProcess& process, std::size_t m);

struct DosOutput {
    std::vector<std::uint8_t> mu;  // d+1 delivery flags
    std::vector<double> stacked;   // (d+1)*m values, newest slot first
};

// history[i] is z_{k-i}; it must hold d+1 vectors of equal length.
DosOutput step_dos(const DosProcess& process, const std::deque<std::vector<double>>& history,
                   DosChannel& channel, Rng& rng);
// Same stacking with externally fixed delivery flags.
DosOutput stack_dos(const DosProcess& process, const std::deque<std::vector<double>>& history,
                    std::span<const std::uint8_t> mu, DosChannel& channel);

struct Episode {
    std::uint64_t start = 0;  // inclusive
    std::uint64_t end = 0;    // exclusive
    AttackKind kind = AttackKind::Fdi;
};

struct AttackScenario {
    std::string name = "unnamed";
    std::uint64_t seed = 42;
    std::uint64_t horizon = 1000;
    std::vector<Episode> schedule;
    std::size_t f = 1;             // sensors corrupted per FDI episode
    double fdi_min_fraction = 0.1; // |bias| drawn in [min, max] * sensor range
    double fdi_max_fraction = 0.5;
    DosProcess dos;
    bool dos_stack = true;         // features = DoS stack of d+1 measurements
    PlantParams plant;
};

std::size_t count_attack_steps(const AttackScenario& scenario);

Dataset generate_dataset(const AttackScenario& scenario, std::uint64_t horizon, std::uint64_t seed);
inline Dataset generate_dataset(const AttackScenario& scenario) {
    return generate_dataset(scenario, scenario.horizon, scenario.seed);
}

// Key/value text: "key = value" lines, '#' comments, and repeated
// "episode = <start> <end> <fdi|dos>" entries.
AttackScenario parse_scenario(std::string_view text);
AttackScenario load_scenario(const std::string& path);
std::string format_scenario(const AttackScenario& scenario);

}  // namespace icsdet
