#include "icsdet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "icsdet/error.hpp"
#include "icsdet/ingest.hpp"

namespace icsdet {

namespace {

double truncated_gaussian(double sigma, Rng& rng) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> normal(0.0, sigma);
    for (;;) {
        const double z = normal(rng);
        if (std::abs(z) <= 3.0 * sigma) return z;
    }
}

double laplace(double scale, Rng& rng) {
    if (scale <= 0.0) return 0.0;
    std::exponential_distribution<double> expo(1.0 / scale);
    std::bernoulli_distribution sign(0.5);
    const double e = expo(rng);
    return sign(rng) ? e : -e;
}

double safe_sqrt(double v) { return std::sqrt(std::max(v, 0.0)); }

}  // namespace

std::pair<PlantState, Measurement> step_plant(const PlantState& state, double inflow,
                                              const PlantParams& p, Rng& rng) {
    if (state.x.size() != kPlantStates) {
        fail(ErrorCode::DimensionMismatch, "step_plant: the built-in plant has two states");
    }
    const double x1 = std::max(state.x[0], 0.0);
    const double x2 = std::max(state.x[1], 0.0);
    const double u = std::max(inflow, 0.0);
    const double q1 = p.a1 * safe_sqrt(x1);
    const double q2 = p.a2 * safe_sqrt(x2);

    PlantState next;
    next.k = state.k + 1;
    next.x[0] = std::max(0.0, x1 + p.dt * (u - q1) + truncated_gaussian(p.process_noise_std, rng));
    next.x[1] = std::max(0.0, x2 + p.dt * (q1 - q2) + truncated_gaussian(p.process_noise_std, rng));

    Measurement m;
    m.k = next.k;
    m.y = {next.x[0], next.x[1], p.a2 * safe_sqrt(next.x[1])};
    for (auto& v : m.y) v += laplace(p.sensor_noise_scale, rng);
    return {std::move(next), std::move(m)};
}

std::vector<double> sensor_ranges(const PlantParams& p) {
    return {p.level_capacity, p.level_capacity, p.a2 * std::sqrt(p.level_capacity)};
}

std::vector<double> level_bound(const PlantParams& p, const PlantState& initial) {
    // Each level relaxes toward the fixed point of its inflow; one step can
    // overshoot by at most dt times the largest inflow.
    const double u = std::max(p.u_max, 0.0);
    const double b1 = std::max(initial.x[0], (u / p.a1) * (u / p.a1)) + p.dt * u;
    const double inflow2 = p.a1 * std::sqrt(b1);
    const double b2 = std::max(initial.x[1], (inflow2 / p.a2) * (inflow2 / p.a2)) + p.dt * inflow2;
    return {b1, b2};
}

std::size_t SensorSelection::f() const {
    return static_cast<std::size_t>(std::count(alpha.begin(), alpha.end(), 1));
}

SensorSelection sample_alpha(std::size_t m, std::size_t f, Rng& rng) {
    if (f == 0 || f > m) {
        fail(ErrorCode::InvalidF, "sample_alpha: need 0 < f <= m (f=" + std::to_string(f) +
                                      ", m=" + std::to_string(m) + ")");
    }
    std::vector<std::size_t> idx(m);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    SensorSelection s;
    s.alpha.assign(m, 0);
    for (std::size_t i = 0; i < f; ++i) s.alpha[idx[i]] = 1;
    return s;
}

std::vector<double> apply_fdi(std::span<const double> y, const SensorSelection& selection,
                              std::span<const double> bias) {
    if (selection.alpha.size() != y.size() || bias.size() != y.size()) {
        fail(ErrorCode::DimensionMismatch, "apply_fdi: y, alpha and bias must share length");
    }
    std::vector<double> out(y.begin(), y.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (selection.alpha[i]) out[i] += bias[i];
    }
    return out;
}

DosChannel make_dos_channel(const DosProcess& process, std::size_t m) {
    DosChannel c;
    c.bad.assign(process.depth + 1, 0);
    c.held.assign(process.depth + 1, std::vector<double>(m, 0.0));
    return c;
}

DosOutput stack_dos(const DosProcess& process, const std::deque<std::vector<double>>& history,
                    std::span<const std::uint8_t> mu, DosChannel& channel) {
    const std::size_t slots = process.depth + 1;
    if (history.size() != slots || mu.size() != slots) {
        fail(ErrorCode::DimensionMismatch, "step_dos: history and mu must hold d+1 entries");
    }
    const std::size_t m = history.front().size();
    if (channel.held.size() != slots) channel = make_dos_channel(process, m);
    DosOutput out;
    out.mu.assign(mu.begin(), mu.end());
    out.stacked.reserve(slots * m);
    for (std::size_t i = 0; i < slots; ++i) {
        if (history[i].size() != m) {
            fail(ErrorCode::DimensionMismatch, "step_dos: history vectors differ in length");
        }
        if (mu[i]) {
            out.stacked.insert(out.stacked.end(), history[i].begin(), history[i].end());
            channel.held[i] = history[i];
        } else if (process.mode == DosProcess::Mode::Zeroing) {
            out.stacked.insert(out.stacked.end(), m, 0.0);
        } else {
            out.stacked.insert(out.stacked.end(), channel.held[i].begin(), channel.held[i].end());
        }
    }
    return out;
}

DosOutput step_dos(const DosProcess& process, const std::deque<std::vector<double>>& history,
                   DosChannel& channel, Rng& rng) {
    const std::size_t slots = process.depth + 1;
    if (channel.bad.size() != slots) {
        channel = make_dos_channel(process, history.empty() ? 0 : history.front().size());
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::uint8_t> mu(slots, 1);
    for (std::size_t i = 0; i < slots; ++i) {
        if (process.kind == DosProcess::Kind::Bernoulli) {
            mu[i] = unit(rng) < process.p_loss ? 0 : 1;
        } else {
            const double flip = channel.bad[i] ? process.p_bad_to_good : process.p_good_to_bad;
            if (unit(rng) < flip) channel.bad[i] ^= 1;
            mu[i] = channel.bad[i] ? 0 : 1;
        }
    }
    return stack_dos(process, history, mu, channel);
}

std::size_t count_attack_steps(const AttackScenario& scenario) {
    std::size_t n = 0;
    for (const auto& e : scenario.schedule) n += e.end - e.start;
    return n;
}

namespace {

void validate_schedule(const AttackScenario& scenario, std::uint64_t horizon) {
    auto episodes = scenario.schedule;
    std::sort(episodes.begin(), episodes.end(),
              [](const Episode& a, const Episode& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < episodes.size(); ++i) {
        const auto& e = episodes[i];
        if (e.end <= e.start || e.kind == AttackKind::None) {
            fail(ErrorCode::InvalidArgument, "scenario: episode [" + std::to_string(e.start) + ", " +
                                                 std::to_string(e.end) + ") is empty or untyped");
        }
        if (e.end > horizon) {
            fail(ErrorCode::InvalidArgument, "scenario: episode ends after the horizon");
        }
        if (i > 0 && e.start < episodes[i - 1].end) {
            fail(ErrorCode::OverlappingEpisodes, "scenario: episodes starting at " +
                                                     std::to_string(episodes[i - 1].start) +
                                                     " and " + std::to_string(e.start) + " overlap");
        }
    }
}

}  // namespace

Dataset generate_dataset(const AttackScenario& scenario, std::uint64_t horizon, std::uint64_t seed) {
    validate_schedule(scenario, horizon);
    const auto& p = scenario.plant;
    const auto& dos = scenario.dos;
    const std::size_t m = kPlantSensors;
    const std::size_t slots = dos.depth + 1;
    const std::size_t width = scenario.dos_stack ? slots * m : m;

    Rng plant_rng(derive_seed(seed, 1));
    Rng attack_rng(derive_seed(seed, 2));
    Rng dos_rng(derive_seed(seed, 3));
    Rng inflow_rng(derive_seed(seed, 4));
    std::uniform_real_distribution<double> inflow_dist(p.u_min, p.u_max);

    // Label per step plus the episode covering it.
    std::vector<long> episode_of(horizon, -1);
    for (std::size_t e = 0; e < scenario.schedule.size(); ++e) {
        for (auto k = scenario.schedule[e].start; k < scenario.schedule[e].end; ++k) {
            episode_of[k] = static_cast<long>(e);
        }
    }
    // Per-episode FDI selection and bias, drawn in schedule order.
    const auto ranges = sensor_ranges(p);
    std::vector<SensorSelection> selections(scenario.schedule.size());
    std::vector<std::vector<double>> biases(scenario.schedule.size());
    std::uniform_real_distribution<double> magnitude(scenario.fdi_min_fraction, scenario.fdi_max_fraction);
    std::bernoulli_distribution sign(0.5);
    for (std::size_t e = 0; e < scenario.schedule.size(); ++e) {
        if (scenario.schedule[e].kind != AttackKind::Fdi) continue;
        selections[e] = sample_alpha(m, scenario.f, attack_rng);
        biases[e].assign(m, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double b = magnitude(attack_rng) * ranges[i];
            biases[e][i] = sign(attack_rng) ? b : -b;
        }
    }

    double inflow = inflow_dist(inflow_rng);
    PlantState state;
    state.x = {(inflow / p.a1) * (inflow / p.a1), (inflow / p.a2) * (inflow / p.a2)};

    std::deque<std::vector<double>> history(slots, std::vector<double>(m, 0.0));
    DosChannel channel = make_dos_channel(dos, m);
    const std::vector<std::uint8_t> all_delivered(slots, 1);

    Matrix x(horizon, width);
    Labels labels(horizon, 0);
    for (std::uint64_t k = 0; k < horizon; ++k) {
        if (p.inflow_period > 0 && k > 0 && k % p.inflow_period == 0) inflow = inflow_dist(inflow_rng);
        auto [next, meas] = step_plant(state, inflow, p, plant_rng);
        state = std::move(next);

        const long e = episode_of[k];
        const AttackKind kind = e >= 0 ? scenario.schedule[static_cast<std::size_t>(e)].kind : AttackKind::None;
        std::vector<double> y = meas.y;
        if (kind == AttackKind::Fdi) {
            y = apply_fdi(y, selections[static_cast<std::size_t>(e)], biases[static_cast<std::size_t>(e)]);
        }
        if (k == 0) {
            // No earlier readings exist; repeat the first one rather than
            // padding with zeros that mimic dropped packets.
            std::fill(history.begin(), history.end(), y);
        } else {
            history.pop_back();
            history.push_front(y);
        }

        const DosOutput out = kind == AttackKind::Dos ? step_dos(dos, history, channel, dos_rng)
                                                      : stack_dos(dos, history, all_delivered, channel);
        auto dst = x.row(k);
        std::copy(out.stacked.begin(), out.stacked.begin() + static_cast<long>(width), dst.begin());
        labels[k] = kind == AttackKind::None ? 0 : 1;
    }

    std::vector<std::string> names;
    for (std::size_t s = 0; s < (scenario.dos_stack ? slots : 1); ++s) {
        for (std::size_t i = 0; i < m; ++i) {
            names.push_back("y" + std::to_string(i + 1) + (s == 0 ? "[k]" : "[k-" + std::to_string(s) + "]"));
        }
    }
    return Dataset(std::move(x), std::move(labels), std::move(names));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void config_error(std::size_t line, const std::string& msg) {
    fail(ErrorCode::ConfigParse, "scenario line " + std::to_string(line) + ": " + msg);
}

double to_real(std::string_view v, std::size_t line) {
    try {
        std::size_t used = 0;
        const std::string s(v);
        const double d = std::stod(s, &used);
        if (used != s.size() || !std::isfinite(d)) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        config_error(line, "expected a number, got '" + std::string(v) + "'");
    }
}

std::uint64_t to_uint(std::string_view v, std::size_t line) {
    const double d = to_real(v, line);
    if (d < 0 || d != std::floor(d)) config_error(line, "expected a non-negative integer");
    return static_cast<std::uint64_t>(d);
}

bool to_bool(std::string_view v, std::size_t line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    config_error(line, "expected true/false");
}

double probability(std::string_view v, std::size_t line) {
    const double p = to_real(v, line);
    if (p < 0.0 || p > 1.0) config_error(line, "probability outside [0,1]");
    return p;
}

}  // namespace

AttackScenario parse_scenario(std::string_view text) {
    AttackScenario s;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) config_error(line_no, "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));

        if (key == "name") s.name = std::string(value);
        else if (key == "seed") s.seed = to_uint(value, line_no);
        else if (key == "horizon") s.horizon = to_uint(value, line_no);
        else if (key == "f") s.f = to_uint(value, line_no);
        else if (key == "fdi.min_fraction") s.fdi_min_fraction = to_real(value, line_no);
        else if (key == "fdi.max_fraction") s.fdi_max_fraction = to_real(value, line_no);
        else if (key == "dos.kind") {
            if (value == "bernoulli") s.dos.kind = DosProcess::Kind::Bernoulli;
            else if (value == "markov") s.dos.kind = DosProcess::Kind::Markov;
            else config_error(line_no, "dos.kind must be bernoulli or markov");
        } else if (key == "dos.mode") {
            if (value == "zeroing") s.dos.mode = DosProcess::Mode::Zeroing;
            else if (value == "hold_last") s.dos.mode = DosProcess::Mode::HoldLast;
            else config_error(line_no, "dos.mode must be zeroing or hold_last");
        } else if (key == "dos.p_loss") s.dos.p_loss = probability(value, line_no);
        else if (key == "dos.p_good_to_bad") s.dos.p_good_to_bad = probability(value, line_no);
        else if (key == "dos.p_bad_to_good") s.dos.p_bad_to_good = probability(value, line_no);
        else if (key == "dos.depth") s.dos.depth = to_uint(value, line_no);
        else if (key == "dos.stack") s.dos_stack = to_bool(value, line_no);
        else if (key == "plant.a1") s.plant.a1 = to_real(value, line_no);
        else if (key == "plant.a2") s.plant.a2 = to_real(value, line_no);
        else if (key == "plant.dt") s.plant.dt = to_real(value, line_no);
        else if (key == "plant.process_noise") s.plant.process_noise_std = to_real(value, line_no);
        else if (key == "plant.sensor_noise") s.plant.sensor_noise_scale = to_real(value, line_no);
        else if (key == "plant.u_min") s.plant.u_min = to_real(value, line_no);
        else if (key == "plant.u_max") s.plant.u_max = to_real(value, line_no);
        else if (key == "plant.inflow_period") s.plant.inflow_period = to_uint(value, line_no);
        else if (key == "plant.level_capacity") s.plant.level_capacity = to_real(value, line_no);
        else if (key == "episode") {
            std::istringstream in{std::string(value)};
            std::uint64_t start = 0, stop = 0;
            std::string kind;
            if (!(in >> start >> stop >> kind)) config_error(line_no, "episode needs '<start> <end> <kind>'");
            Episode e{start, stop, AttackKind::None};
            if (kind == "fdi") e.kind = AttackKind::Fdi;
            else if (kind == "dos") e.kind = AttackKind::Dos;
            else config_error(line_no, "episode kind must be fdi or dos");
            s.schedule.push_back(e);
        } else {
            config_error(line_no, "unknown key '" + std::string(key) + "'");
        }
    }
    if (!(s.plant.a1 > 0.0 && s.plant.a2 > 0.0 && s.plant.dt > 0.0)) {
        fail(ErrorCode::ConfigParse, "scenario: plant.a1, plant.a2 and plant.dt must be positive");
    }
    if (!(s.fdi_min_fraction >= 0.0 && s.fdi_min_fraction <= s.fdi_max_fraction)) {
        fail(ErrorCode::ConfigParse, "scenario: need 0 <= fdi.min_fraction <= fdi.max_fraction");
    }
    return s;
}

AttackScenario load_scenario(const std::string& path) { return parse_scenario(read_file(path)); }

std::string format_scenario(const AttackScenario& s) {
    std::ostringstream out;
    out << "name = " << s.name << "\n"
        << "seed = " << s.seed << "\n"
        << "horizon = " << s.horizon << "\n"
        << "f = " << s.f << "\n"
        << "fdi.min_fraction = " << format_double(s.fdi_min_fraction) << "\n"
        << "fdi.max_fraction = " << format_double(s.fdi_max_fraction) << "\n"
        << "dos.kind = " << (s.dos.kind == DosProcess::Kind::Bernoulli ? "bernoulli" : "markov") << "\n"
        << "dos.mode = " << (s.dos.mode == DosProcess::Mode::Zeroing ? "zeroing" : "hold_last") << "\n"
        << "dos.p_loss = " << format_double(s.dos.p_loss) << "\n"
        << "dos.p_good_to_bad = " << format_double(s.dos.p_good_to_bad) << "\n"
        << "dos.p_bad_to_good = " << format_double(s.dos.p_bad_to_good) << "\n"
        << "dos.depth = " << s.dos.depth << "\n"
        << "dos.stack = " << (s.dos_stack ? "true" : "false") << "\n"
        << "plant.a1 = " << format_double(s.plant.a1) << "\n"
        << "plant.a2 = " << format_double(s.plant.a2) << "\n"
        << "plant.dt = " << format_double(s.plant.dt) << "\n"
        << "plant.process_noise = " << format_double(s.plant.process_noise_std) << "\n"
        << "plant.sensor_noise = " << format_double(s.plant.sensor_noise_scale) << "\n"
        << "plant.u_min = " << format_double(s.plant.u_min) << "\n"
        << "plant.u_max = " << format_double(s.plant.u_max) << "\n"
        << "plant.inflow_period = " << s.plant.inflow_period << "\n"
        << "plant.level_capacity = " << format_double(s.plant.level_capacity) << "\n";
    for (const auto& e : s.schedule) {
        out << "episode = " << e.start << " " << e.end << " " << (e.kind == AttackKind::Fdi ? "fdi" : "dos")
            << "\n";
    }
    return out.str();
}

}  // namespace icsdet
