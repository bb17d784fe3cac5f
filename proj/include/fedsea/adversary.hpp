#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>

#include "fedsea/core.hpp"
#include "fedsea/rng.hpp"

namespace fedsea {

inline const char* to_string(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::static_iid: return "static_iid";
        case AdversaryKind::static_heterogeneous: return "static_heterogeneous";
        case AdversaryKind::drifting_means: return "drifting_means";
        case AdversaryKind::cyclic_means: return "cyclic_means";
        case AdversaryKind::piecewise_shift: return "piecewise_shift";
        case AdversaryKind::dirac_adversarial: return "dirac_adversarial";
    }
    return "?";
}

struct Moments {
    Vector mean;
    double variance = 0.0;
};

// Oblivious schedule (t, m) -> D_{t,m}. Deterministic, so every heterogeneity constant is a
// property of the configuration.
class AdversarySchedule {
public:
    AdversarySchedule(AdversarySpec spec, std::size_t num_clients, std::size_t horizon, std::size_t dimension)
        : spec_(std::move(spec)), M_(num_clients), T_(horizon), d_(dimension) {
        validate();
    }

    const AdversarySpec& spec() const { return spec_; }
    AdversaryKind kind() const { return spec_.kind; }
    std::size_t num_clients() const { return M_; }
    std::size_t horizon() const { return T_; }
    std::size_t dimension() const { return d_; }

    // Mean of D_{t,m} written into `out`; 1-based indices, unchecked.
    void mean_into(std::size_t t, std::size_t m, std::span<double> out) const {
        switch (spec_.kind) {
            case AdversaryKind::static_iid:
                copy(spec_.means.front(), out);
                break;
            case AdversaryKind::static_heterogeneous:
                copy(spec_.means[(m - 1) % spec_.means.size()], out);
                break;
            case AdversaryKind::drifting_means:
                for (std::size_t i = 0; i < d_; ++i)
                    out[i] = spec_.base[i] + spec_.velocity[i] * static_cast<double>(t);
                break;
            case AdversaryKind::cyclic_means: {
                const double phase = 2.0 * std::numbers::pi * static_cast<double>((t - 1) % spec_.period) /
                                     static_cast<double>(spec_.period);
                const double c = std::cos(phase);
                for (std::size_t i = 0; i < d_; ++i) out[i] = spec_.base[i] + spec_.amplitude[i] * c;
                break;
            }
            case AdversaryKind::piecewise_shift: {
                std::size_t seg = 0;
                while (seg < spec_.shift_times.size() && spec_.shift_times[seg] <= t) ++seg;
                copy(spec_.segments[seg], out);
                break;
            }
            case AdversaryKind::dirac_adversarial:
                copy(spec_.points[(t - 1) % spec_.points.size()], out);
                break;
        }
        if (!spec_.client_offsets.empty()) {
            const Vector& off = spec_.client_offsets[(m - 1) % spec_.client_offsets.size()];
            for (std::size_t i = 0; i < d_; ++i) out[i] += off[i];
        }
    }

    double variance(std::size_t /*t*/, std::size_t m) const {
        if (spec_.kind == AdversaryKind::dirac_adversarial) return 0.0;
        return spec_.variances[(m - 1) % spec_.variances.size()];
    }

    DistParams dist_params(std::size_t t, std::size_t m) const {
        check_index(t, m);
        Vector mean(d_);
        mean_into(t, m, mean);
        return DistParams::gaussian(std::move(mean), variance(t, m));
    }

    // Every supported kind is parametric, so moments are always available; the optional is the
    // extension point for kinds that are not.
    std::optional<Moments> analytic_moments(std::size_t t, std::size_t m) const {
        check_index(t, m);
        Moments out{Vector(d_), variance(t, m)};
        mean_into(t, m, out.mean);
        return out;
    }

    // Same distribution for every client at every step.
    bool client_independent() const {
        if (spec_.kind == AdversaryKind::static_heterogeneous && spec_.means.size() > 1) return false;
        return spec_.client_offsets.size() <= 1 && spec_.variances.size() <= 1;
    }

private:
    void copy(const Vector& v, std::span<double> out) const { std::copy(v.begin(), v.end(), out.begin()); }

    void check_index(std::size_t t, std::size_t m) const {
        if (t < 1 || t > T_ || m < 1 || m > M_)
            throw Error("adversary index out of range: t=" + std::to_string(t) + ", m=" + std::to_string(m));
    }

    void need_dim(const Vector& v, const char* what) const {
        if (v.size() != d_) throw ConfigError(std::string("adversary ") + what + " must have dimension " + std::to_string(d_));
        if (!vec::all_finite(v)) throw ConfigError(std::string("adversary ") + what + " must be finite");
    }

    void validate() const {
        if (M_ < 1 || T_ < 1 || d_ < 1) throw ConfigError("adversary needs M, T, d >= 1");
        if (spec_.variances.empty()) throw ConfigError("adversary variances must not be empty");
        for (double v : spec_.variances)
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("adversary variances must be finite and >= 0");
        for (const auto& off : spec_.client_offsets) need_dim(off, "client_offsets entry");
        switch (spec_.kind) {
            case AdversaryKind::static_iid:
                if (spec_.means.size() != 1) throw ConfigError("static_iid needs exactly one mean");
                need_dim(spec_.means.front(), "mean");
                break;
            case AdversaryKind::static_heterogeneous:
                if (spec_.means.empty()) throw ConfigError("static_heterogeneous needs per-client means");
                for (const auto& m : spec_.means) need_dim(m, "mean");
                break;
            case AdversaryKind::drifting_means:
                need_dim(spec_.base, "base");
                need_dim(spec_.velocity, "velocity");
                break;
            case AdversaryKind::cyclic_means:
                need_dim(spec_.base, "base");
                need_dim(spec_.amplitude, "amplitude");
                if (spec_.period < 1) throw ConfigError("cyclic period must be >= 1");
                break;
            case AdversaryKind::piecewise_shift:
                if (spec_.segments.size() != spec_.shift_times.size() + 1)
                    throw ConfigError("piecewise_shift needs one more segment than shift times");
                for (const auto& s : spec_.segments) need_dim(s, "segment mean");
                for (std::size_t i = 0; i < spec_.shift_times.size(); ++i) {
                    if (spec_.shift_times[i] < 2) throw ConfigError("shift times must be >= 2");
                    if (i > 0 && spec_.shift_times[i] <= spec_.shift_times[i - 1])
                        throw ConfigError("shift times must be strictly increasing");
                }
                break;
            case AdversaryKind::dirac_adversarial:
                if (spec_.points.empty()) throw ConfigError("dirac_adversarial needs at least one point");
                for (const auto& p : spec_.points) need_dim(p, "point");
                break;
        }
    }

    AdversarySpec spec_;
    std::size_t M_, T_, d_;
};

}  // namespace fedsea
