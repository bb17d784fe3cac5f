#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <span>
#include <sstream>
#include <vector>

#include "fedsea/adversary.hpp"
#include "fedsea/core.hpp"
#include "fedsea/geometry.hpp"
#include "fedsea/losses.hpp"
#include "fedsea/rng.hpp"

namespace fedsea {

// Iterates above this norm count as divergence.
inline constexpr double kDivergenceNorm = 1e12;

// Client iterates x_{t,m} (flat, client-major) and their virtual average x_t.
struct SimState {
    std::size_t t = 1;
    std::size_t num_clients = 0;
    std::size_t dimension = 0;
    Vector client_iterates;
    Vector virtual_average;

    SimState() = default;
    SimState(std::size_t M, std::size_t d, std::span<const double> x1)
        : num_clients(M), dimension(d), client_iterates(M * d), virtual_average(x1.begin(), x1.end()) {
        for (std::size_t m = 0; m < M; ++m) std::copy(x1.begin(), x1.end(), client_iterates.begin() + m * d);
    }

    std::span<const double> client(std::size_t m) const { return {client_iterates.data() + m * dimension, dimension}; }
    std::span<double> client(std::size_t m) { return {client_iterates.data() + m * dimension, dimension}; }

    // Recompute x_t = (1/M) sum_m x_{t,m}, summing in client order.
    void refresh_average() {
        std::fill(virtual_average.begin(), virtual_average.end(), 0.0);
        for (std::size_t m = 0; m < num_clients; ++m) {
            const auto x = client(m);
            for (std::size_t i = 0; i < dimension; ++i) virtual_average[i] += x[i];
        }
        for (double& v : virtual_average) v /= static_cast<double>(num_clients);
    }

    // Server step: every client receives the current average.
    void synchronize() {
        refresh_average();
        for (std::size_t m = 0; m < num_clients; ++m)
            std::copy(virtual_average.begin(), virtual_average.end(), client(m).begin());
    }
};

// V_t = (1/M) sum_m ||x_{t,m} - x_t||^2
inline double consensus_error(const SimState& state) {
    if (state.num_clients <= 1) return 0.0;
    double s = 0.0;
    for (std::size_t m = 0; m < state.num_clients; ++m) s += vec::sq_dist(state.client(m), state.virtual_average);
    return s / static_cast<double>(state.num_clients);
}

inline Vector project(std::span<const double> x, const Domain& domain) {
    Vector y(x.begin(), x.end());
    project_in_place(y, domain);
    return y;
}

// Read-only view of one step of a trace.
struct TraceRecord {
    std::size_t t = 0;
    std::span<const double> realized_loss;  // f(x_{t,m}, xi_{t,m}) per client
    std::span<const double> expected_loss;  // f_t(x_{t,m}) per client (oracle)
    double virtual_loss = 0.0;              // f_t(x_t)
    double consensus = 0.0;                 // V_t
    double eta = 0.0;
    bool sync = false;       // averaging performed after this step's update
    bool projected = false;  // projection activated for some client at this step
};

struct Trace {
    std::size_t horizon = 0;
    std::size_t num_clients = 0;
    std::size_t dimension = 0;
    std::vector<double> realized_loss;  // T x M
    std::vector<double> expected_loss;  // T x M
    std::vector<double> virtual_loss;
    std::vector<double> consensus;
    std::vector<double> eta;
    std::vector<std::uint8_t> sync;
    std::vector<std::uint8_t> projected;
    // Filled only with EngineOptions::record_iterates: x_t and (1/M) sum_m g_{t,m}, T x d each.
    std::vector<double> virtual_iterates;
    std::vector<double> mean_gradients;
    std::vector<SimState> captured;  // states at EngineOptions::capture_steps, before the update
    double max_iterate_norm = 0.0;

    TraceRecord record(std::size_t t) const {
        const std::size_t i = t - 1;
        return TraceRecord{t,
                           {realized_loss.data() + i * num_clients, num_clients},
                           {expected_loss.data() + i * num_clients, num_clients},
                           virtual_loss[i],
                           consensus[i],
                           eta[i],
                           sync[i] != 0,
                           projected[i] != 0};
    }

    std::size_t projected_steps() const { return static_cast<std::size_t>(std::count(projected.begin(), projected.end(), 1)); }
};

struct EngineOptions {
    bool record_iterates = false;
    std::vector<std::size_t> capture_steps;  // 1-based
};

template <class O>
concept GlobalLossOracle = requires(const O& o, std::size_t t, std::span<const double> x) {
    { o.global_loss(t, x) } -> std::convertible_to<double>;
};

// One replicate of federated online SGD with periodic averaging. Client m at step t draws
// xi_{t,m} from the stream (seed, replicate, t, m, data), so results do not depend on scheduling.
template <GlobalLossOracle Oracle>
Trace run_replicate(const ExperimentConfig& config, const LossModel& model, const AdversarySchedule& schedule,
                    std::span<const double> step_sizes, const Oracle& oracle, std::uint32_t replicate,
                    const EngineOptions& options = {}) {
    const std::size_t T = config.horizon, M = config.num_clients, d = config.dimension;
    if (step_sizes.size() != T) throw Error("step-size sequence length must equal the horizon");
    if (model.dimension() != d || schedule.dimension() != d) throw Error("dimension mismatch between config and model");

    Trace tr;
    tr.horizon = T;
    tr.num_clients = M;
    tr.dimension = d;
    tr.realized_loss.resize(T * M);
    tr.expected_loss.resize(T * M);
    tr.virtual_loss.resize(T);
    tr.consensus.resize(T);
    tr.eta.assign(step_sizes.begin(), step_sizes.end());
    tr.sync.resize(T);
    tr.projected.resize(T);
    if (options.record_iterates) {
        tr.virtual_iterates.resize(T * d);
        tr.mean_gradients.resize(T * d);
    }
    std::vector<std::size_t> captures = options.capture_steps;
    std::sort(captures.begin(), captures.end());
    auto next_capture = captures.begin();

    const Vector x1 = config.start_point();
    SimState state(M, d, x1);
    tr.max_iterate_norm = vec::norm(x1);

    DistParams params{DistFamily::point_mass, Vector(d), 0.0};
    Sample sample{Vector(d), 0.0};
    Vector grad(d), grad_sum(d);

    for (std::size_t t = 1; t <= T; ++t) {
        const std::size_t i = t - 1;
        const double eta = step_sizes[i];
        state.t = t;
        state.refresh_average();
        tr.consensus[i] = consensus_error(state);
        tr.virtual_loss[i] = oracle.global_loss(t, state.virtual_average);
        if (options.record_iterates)
            std::copy(state.virtual_average.begin(), state.virtual_average.end(), tr.virtual_iterates.begin() + i * d);
        while (next_capture != captures.end() && *next_capture < t) ++next_capture;
        if (next_capture != captures.end() && *next_capture == t) tr.captured.push_back(state);

        std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
        bool projected = false;
        for (std::size_t m = 0; m < M; ++m) {
            auto x = state.client(m);
            tr.expected_loss[i * M + m] = oracle.global_loss(t, x);

            schedule.mean_into(t, m + 1, params.mean);
            params.variance = schedule.variance(t, m + 1);
            params.family = params.variance > 0.0 ? DistFamily::gaussian_isotropic : DistFamily::point_mass;
            RngStream stream({config.seed, replicate, static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(m + 1),
                              DrawPurpose::data});
            draw_sample_into(model, params, stream, sample);

            tr.realized_loss[i * M + m] = sample_loss(model, x, sample);
            stochastic_gradient_into(model, x, sample, grad);
            for (std::size_t k = 0; k < d; ++k) {
                grad_sum[k] += grad[k];
                x[k] -= eta * grad[k];
            }
            projected = project_in_place(x, config.domain) || projected;

            const double n = vec::norm(x);
            if (!std::isfinite(n) || n > kDivergenceNorm) {
                std::ostringstream os;
                os << "divergence at t=" << t << " (eta_t=" << eta << ", ||x_t||=" << vec::norm(state.virtual_average)
                   << ", client " << (m + 1) << " norm " << n << ")";
                throw DivergenceError(os.str());
            }
            tr.max_iterate_norm = std::max(tr.max_iterate_norm, n);
        }
        if (options.record_iterates)
            for (std::size_t k = 0; k < d; ++k) tr.mean_gradients[i * d + k] = grad_sum[k] / static_cast<double>(M);
        tr.projected[i] = projected ? 1 : 0;
        if (config.is_sync_step(t)) {
            state.synchronize();
            tr.sync[i] = 1;
        }
    }
    return tr;
}

}  // namespace fedsea
