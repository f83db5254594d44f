// RSSI maximization over binary configurations: random-coordinate ascent
// with restarts, a Gray-code exhaustive oracle, and an incremental
// evaluator that updates the channel after a single bit flip in O(N_C^2)
// via a rank-1 (Sherman-Morrison) correction of the cached resolvent.
#pragma once

#include "bdris/circuits.hpp"
#include "bdris/environment.hpp"
#include "bdris/estimation.hpp"
#include "bdris/types.hpp"

#include <bit>
#include <functional>
#include <optional>
#include <random>

namespace bdris {

/// Deterministic mapping from configuration to channel.
using ChannelOracle = std::function<CMatrix(const BinaryConfig&)>;

/// Received signal strength: |h|^2 for a SISO link, squared Frobenius
/// norm of the channel matrix in general.
inline double rssi(const CMatrix& h) {
    return h.squaredNorm();
}

struct OptResult {
    BinaryConfig b_opt;
    double r_opt;
    long long evaluations;
    std::vector<double> trajectory; // starting RSSI of the winning restart,
                                    // then each accepted improvement
};

/// Incremental channel evaluator over the diagonal representation.
/// Holds the inverse of M = I - S^IL K_CC; flipping one bit changes
/// S^IL by Delta e_i e_i^T with Delta = +-(r_b - r_a), a rank-1 change of
/// M handled in O(N_C^2). A flip whose Sherman-Morrison denominator
/// vanishes falls back to a full refactorization.
class FlipEvaluator {
public:
    struct Counters {
        long long rank1_updates = 0;
        long long refactorizations = 0;
        long long rank1_work = 0;    // accumulated n^2 units
        long long refactor_work = 0; // accumulated n^3 units
    };

    FlipEvaluator(const ModelParams& params, const BinaryConfig& b0)
        : p_(params), b_(b0) {
        p_.check();
        detail::require(b0.size() == p_.n_c(), "FlipEvaluator: configuration length mismatch");
        u_ = p_.k_rc();
        v_ = p_.k_tc().transpose();
        refactor();
    }

    FlipEvaluator(const CascadeModel& k, const LoadBank& bank, const BinaryConfig& b0)
        : FlipEvaluator(ModelParams::from_cascade(k, bank), b0) {}

    const BinaryConfig& config() const { return b_; }
    const CMatrix& channel() const { return h_; }
    const Counters& counters() const { return counters_; }

    /// Repositions at an arbitrary configuration (full refactorization).
    const CMatrix& reset(const BinaryConfig& b) {
        detail::require(b.size() == p_.n_c(), "FlipEvaluator: configuration length mismatch");
        b_ = b;
        undo_valid_ = false;
        refactor();
        return h_;
    }

    /// Flips bit i and returns the updated channel. The previous state is
    /// kept until commit() or rollback(); a second flip() discards it.
    const CMatrix& flip(Index i) {
        detail::require(i >= 0 && i < p_.n_c(), "FlipEvaluator: bit index out of range");
        const Index n = p_.n_c();
        undo_winv_ = winv_;
        undo_d_ = d_;
        undo_h_ = h_;
        undo_bit_ = i;
        undo_valid_ = true;

        const Complex delta = (b_.bit(i) == 0) ? (p_.r_b - p_.r_a) : (p_.r_a - p_.r_b);
        b_.flip(i);
        d_(i) += delta;

        // M' = M - delta e_i K.row(i); Sherman-Morrison on the inverse.
        const Complex denom = 1.0 - delta * (p_.k_cc.row(i) * winv_.col(i)).value();
        if (std::abs(denom) <= 1e-12) {
            refactor();
            return h_;
        }
        const CVector col = winv_.col(i);
        const Eigen::RowVectorXcd row = p_.k_cc.row(i) * winv_;
        winv_ += (delta / denom) * col * row;
        counters_.rank1_updates += 1;
        counters_.rank1_work += n * n;
        recompute_channel();
        return h_;
    }

    /// Keeps the last flip.
    void commit() { undo_valid_ = false; }

    /// Undoes the last uncommitted flip.
    void rollback() {
        detail::require(undo_valid_, "FlipEvaluator: nothing to roll back");
        winv_ = undo_winv_;
        d_ = undo_d_;
        h_ = undo_h_;
        b_.flip(undo_bit_);
        undo_valid_ = false;
    }

private:
    void refactor() {
        const Index n = p_.n_c();
        d_.resize(n);
        for (Index i = 0; i < n; ++i)
            d_(i) = p_.r_a + (p_.r_b - p_.r_a) * static_cast<double>(b_.bit(i));
        const CMatrix m = CMatrix::Identity(n, n) - CMatrix(d_.asDiagonal()) * p_.k_cc;
        Eigen::FullPivLU<CMatrix> lu(m);
        if (!lu.isInvertible())
            throw NumericalError("FlipEvaluator: singular resolvent");
        winv_ = lu.inverse();
        counters_.refactorizations += 1;
        counters_.refactor_work += n * n * n;
        recompute_channel();
    }

    void recompute_channel() {
        h_ = p_.k_rt + u_ * (winv_ * (d_.asDiagonal() * v_));
    }

    ModelParams p_;
    BinaryConfig b_;
    CMatrix u_, v_;   // K_RC and K_CT
    CVector d_;       // diagonal of S^IL
    CMatrix winv_;    // (I - S^IL K_CC)^-1
    CMatrix h_;
    Counters counters_;

    CMatrix undo_winv_, undo_h_;
    CVector undo_d_;
    Index undo_bit_ = 0;
    bool undo_valid_ = false;
};

namespace detail {

// Policy adapters so the ascent and the exhaustive sweep run identically
// over a plain oracle callable or an incremental evaluator.
struct FnOraclePolicy {
    const ChannelOracle* fn;
    BinaryConfig cur;
    BinaryConfig pending;

    explicit FnOraclePolicy(const ChannelOracle& f, Index n_c)
        : fn(&f), cur(BinaryConfig::zeros(n_c)), pending(cur) {}

    double start(const BinaryConfig& b) {
        cur = b;
        return rssi((*fn)(cur));
    }
    double probe(Index i) {
        pending = cur;
        pending.flip(i);
        return rssi((*fn)(pending));
    }
    void accept() { cur = pending; }
    void reject() {}
    const BinaryConfig& config() const { return cur; }
    double exact(const BinaryConfig& b) const { return rssi((*fn)(b)); }
};

struct FlipEvaluatorPolicy {
    FlipEvaluator* ev;

    explicit FlipEvaluatorPolicy(FlipEvaluator& e) : ev(&e) {}

    double start(const BinaryConfig& b) { return rssi(ev->reset(b)); }
    double probe(Index i) { return rssi(ev->flip(i)); }
    void accept() { ev->commit(); }
    void reject() { ev->rollback(); }
    const BinaryConfig& config() const { return ev->config(); }
    double exact(const BinaryConfig& b) const { return rssi(ev->reset(b)); }
};

// Random-coordinate ascent, one restart per sub-seed, strict-improvement
// acceptance, 10 N_C flips per restart.
template <class Policy>
OptResult ascent_core(Policy&& pol, Index n_c, std::uint64_t seed,
                      int restarts, Index iters_per_restart) {
    detail::require(n_c >= 1, "coordinate_ascent: need n_c >= 1");
    if (iters_per_restart < 0) iters_per_restart = 10 * n_c;

    long long evals = 0;
    std::optional<BinaryConfig> best_b;
    double best_r = -1.0;
    std::vector<double> best_traj;

    for (int rs = 0; rs < restarts; ++rs) {
        std::seed_seq sq{seed, static_cast<std::uint64_t>(rs)};
        std::mt19937_64 rng(sq);
        std::uniform_int_distribution<Index> pick(0, n_c - 1);

        BinaryConfig b = BinaryConfig::random(n_c, rng);
        double r_curr = pol.start(b);
        ++evals;
        std::vector<double> traj{r_curr};
        for (Index k = 0; k < iters_per_restart; ++k) {
            const Index i = pick(rng);
            const double r_new = pol.probe(i);
            ++evals;
            if (r_new > r_curr) {
                pol.accept();
                r_curr = r_new;
                traj.push_back(r_curr);
            } else {
                pol.reject();
            }
        }
        if (!best_b || r_curr > best_r) {
            best_r = r_curr;
            best_b = pol.config();
            best_traj = std::move(traj);
        }
    }
    // Exact re-evaluation at the winner guards against incremental drift.
    best_r = pol.exact(*best_b);
    return OptResult{std::move(*best_b), best_r, evals, std::move(best_traj)};
}

// Gray-code enumeration of all 2^n configurations: one bit flip per step.
template <class Policy>
OptResult exhaustive_core(Policy&& pol, Index n_c) {
    detail::require(n_c >= 1 && n_c <= 24, "exhaustive_search: n_c must lie in [1, 24]");
    BinaryConfig b = BinaryConfig::zeros(n_c);
    double r = pol.start(b);
    long long evals = 1;
    BinaryConfig best_b = b;
    double best_r = r;
    std::vector<double> traj{r};
    const std::uint64_t total = std::uint64_t{1} << n_c;
    for (std::uint64_t step = 1; step < total; ++step) {
        const Index i = static_cast<Index>(std::countr_zero(step));
        r = pol.probe(i);
        pol.accept();
        ++evals;
        if (r > best_r) { // strict: ties keep the first occurrence
            best_r = r;
            best_b = pol.config();
            traj.push_back(r);
        }
    }
    best_r = pol.exact(best_b);
    return OptResult{std::move(best_b), best_r, evals, std::move(traj)};
}

} // namespace detail

/// Coordinate ascent: per restart, start from a random configuration and
/// for 10 N_C iterations flip a uniformly random coordinate, accepting
/// only strict RSSI improvements; the best of `restarts` restarts wins.
inline OptResult coordinate_ascent(const ChannelOracle& oracle, Index n_c, std::uint64_t seed,
                                   int restarts = 10, Index iters_per_restart = -1) {
    detail::FnOraclePolicy pol(oracle, n_c);
    return detail::ascent_core(pol, n_c, seed, restarts, iters_per_restart);
}

/// Same ascent driven through the incremental evaluator: each probe is a
/// rank-1 flip, rejected probes are rolled back.
inline OptResult coordinate_ascent(FlipEvaluator& ev, std::uint64_t seed,
                                   int restarts = 10, Index iters_per_restart = -1) {
    detail::FlipEvaluatorPolicy pol(ev);
    return detail::ascent_core(pol, ev.config().size(), seed, restarts, iters_per_restart);
}

/// Enumerates all 2^n_c configurations in Gray-code order and returns the
/// maximum; ties broken by first occurrence.
inline OptResult exhaustive_search(const ChannelOracle& oracle, Index n_c) {
    detail::FnOraclePolicy pol(oracle, n_c);
    return detail::exhaustive_core(pol, n_c);
}

/// Gray-code exhaustive sweep through the incremental evaluator: exactly
/// one rank-1 flip per visited configuration.
inline OptResult exhaustive_search(FlipEvaluator& ev) {
    detail::FlipEvaluatorPolicy pol(ev);
    return detail::exhaustive_core(pol, ev.config().size());
}

} // namespace bdris
