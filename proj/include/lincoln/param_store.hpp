#ifndef LINCOLN_PARAM_STORE_HPP
#define LINCOLN_PARAM_STORE_HPP

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lincoln/errors.hpp"
#include "lincoln/rng.hpp"
#include "lincoln/tape.hpp"
#include "lincoln/tensor.hpp"

namespace lincoln {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Named trainable tensors plus per-parameter Adam state. Names are unique and
// shapes are frozen at registration.
class ParamStore {
public:
    struct Entry {
        Tensor value;
        Tensor m, v;
        long step = 0;
    };

    Var use(Tape& tape, const std::string& name) const {
        return tape.param(name, value(name));
    }

    void create(const std::string& name, Tensor init) {
        auto [it, inserted] = entries_.emplace(name, Entry{});
        if (!inserted) raise(ErrorCode::InvalidConfig, "duplicate parameter name " + name);
        it->second.m = Tensor(init.rows(), init.cols(), 0.0);
        it->second.v = Tensor(init.rows(), init.cols(), 0.0);
        it->second.value = std::move(init);
    }

    // Weight init: uniform in ±1/sqrt(fan_in), stream seeded from the master
    // seed and the parameter name so registration order never matters.
    void create_uniform(const std::string& name, std::size_t rows, std::size_t cols,
                        std::uint64_t master_seed, std::size_t fan_in) {
        Rng rng(derive_seed(master_seed, "param/" + name));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in == 0 ? 1 : fan_in));
        Tensor t(rows, cols);
        for (double& x : t.raw()) x = rng.uniform(-bound, bound);
        create(name, std::move(t));
    }

    void create_zeros(const std::string& name, std::size_t rows, std::size_t cols) {
        create(name, Tensor(rows, cols, 0.0));
    }

    bool has(const std::string& name) const { return entries_.count(name) != 0; }

    const Tensor& value(const std::string& name) const { return entry(name).value; }
    Tensor& mutable_value(const std::string& name) { return entry(name).value; }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    std::map<std::string, Entry>& entries() { return entries_; }

    std::map<std::string, Tensor> snapshot_values() const {
        std::map<std::string, Tensor> out;
        for (const auto& [name, e] : entries_) out.emplace(name, e.value);
        return out;
    }

    void restore_values(const std::map<std::string, Tensor>& values) {
        for (const auto& [name, v] : values) {
            Entry& e = entry(name);
            if (!e.value.same_shape(v)) raise(ErrorCode::ShapeMismatch, "restore " + name);
            e.value = v;
        }
    }

    // Full checkpoint including optimizer state, so a restore rewinds the
    // optimizer trajectory too.
    std::map<std::string, Entry> snapshot_state() const { return entries_; }

    void restore_state(const std::map<std::string, Entry>& state) {
        for (const auto& [name, s] : state) {
            Entry& e = entry(name);
            if (!e.value.same_shape(s.value)) raise(ErrorCode::ShapeMismatch, "restore " + name);
            e = s;
        }
    }

private:
    Entry& entry(const std::string& name) {
        auto it = entries_.find(name);
        if (it == entries_.end()) raise(ErrorCode::InvalidConfig, "unknown parameter " + name);
        return it->second;
    }
    const Entry& entry(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) raise(ErrorCode::InvalidConfig, "unknown parameter " + name);
        return it->second;
    }

    std::map<std::string, Entry> entries_;
};

// Bias-corrected Adam, applied in place. Parameters missing from `grads`
// are treated as zero-gradient.
inline void adam_step(ParamStore& store, const std::map<std::string, Tensor>& grads,
                      const AdamConfig& cfg = AdamConfig{}) {
    for (auto& [name, e] : store.entries()) {
        auto git = grads.find(name);
        const Tensor* g = git == grads.end() ? nullptr : &git->second;
        if (g && !g->same_shape(e.value)) raise(ErrorCode::ShapeMismatch, "adam_step " + name);
        e.step += 1;
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(e.step));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(e.step));
        for (std::size_t i = 0; i < e.value.size(); ++i) {
            const double gi = g ? g->raw()[i] : 0.0;
            e.m.raw()[i] = cfg.beta1 * e.m.raw()[i] + (1.0 - cfg.beta1) * gi;
            e.v.raw()[i] = cfg.beta2 * e.v.raw()[i] + (1.0 - cfg.beta2) * gi * gi;
            const double mhat = e.m.raw()[i] / bc1;
            const double vhat = e.v.raw()[i] / bc2;
            e.value.raw()[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

// Reverse sweep completed against a store: every registered parameter gets a
// gradient, zeros when it never reached the tape (or sits off the path).
inline std::map<std::string, Tensor> backward(Tape& tape, Var output, const ParamStore& store) {
    auto grads = tape.backward(output);
    for (const auto& [name, e] : store.entries())
        if (grads.find(name) == grads.end())
            grads.emplace(name, Tensor(e.value.rows(), e.value.cols(), 0.0));
    return grads;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Central-difference check of reverse-mode gradients for a scalar function of
// the store's parameters. Relative error denominator: max(1, |a|, |n|).
inline GradCheckResult grad_check(const std::function<Var(Tape&, const ParamStore&)>& f,
                                  ParamStore& store, double epsilon) {
    if (!(epsilon > 0.0) || epsilon > 1e-3)
        raise(ErrorCode::InvalidConfig, "grad_check epsilon must be in (0, 1e-3]");

    std::map<std::string, Tensor> analytic;
    {
        Tape tape;
        Var out = f(tape, store);
        analytic = backward(tape, out, store);
    }

    auto eval = [&]() {
        Tape tape;
        Var out = f(tape, store);
        const Tensor& v = out.value();
        if (v.rows() != 1 || v.cols() != 1) raise(ErrorCode::NotScalarOutput, "grad_check");
        return v(0, 0);
    };

    GradCheckResult result;
    for (auto& [name, entry] : store.entries()) {
        const Tensor& a = analytic.at(name);
        for (std::size_t i = 0; i < entry.value.size(); ++i) {
            const double saved = entry.value.raw()[i];
            entry.value.raw()[i] = saved + epsilon;
            const double fp = eval();
            entry.value.raw()[i] = saved - epsilon;
            const double fm = eval();
            entry.value.raw()[i] = saved;
            const double numeric = (fp - fm) / (2.0 * epsilon);
            const double an = a.raw()[i];
            const double denom = std::max({1.0, std::abs(an), std::abs(numeric)});
            const double rel = std::abs(an - numeric) / denom;
            if (rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = name;
                result.worst_index = i;
                result.analytic = an;
                result.numeric = numeric;
            }
        }
    }
    return result;
}

} // namespace lincoln

#endif // LINCOLN_PARAM_STORE_HPP
