// End-to-end channel estimation: fit the diagonal-representation
// parameters (RT/AC/CC blocks of the cascade plus the two load
// reflections) from (configuration, channel) pairs by first-order descent
// on a successive-difference loss, then predict unseen configurations.
//
// The fitted model knows nothing about the number of RIS elements, the
// radio environment or the load circuit; only the dataset generator does.
#pragma once

#include "bdris/circuits.hpp"
#include "bdris/environment.hpp"
#include "bdris/io.hpp"
#include "bdris/network.hpp"
#include "bdris/types.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace bdris {

/// Estimable parameters of the diagonal representation. k_ac stacks the
/// TC rows above the RC rows; k_cc is symmetric (only its upper triangle
/// is independent and descent steps act on the triangle).
struct ModelParams {
    CMatrix k_rt; // N_R x N_T
    CMatrix k_ac; // N_A x N_C, rows T first then R
    CMatrix k_cc; // N_C x N_C, symmetric
    Complex r_a{};
    Complex r_b{};

    Index n_r() const { return k_rt.rows(); }
    Index n_t() const { return k_rt.cols(); }
    Index n_a() const { return k_ac.rows(); }
    Index n_c() const { return k_ac.cols(); }

    CMatrix k_tc() const { return k_ac.topRows(n_t()); }
    CMatrix k_rc() const { return k_ac.bottomRows(n_r()); }

    void check() const {
        detail::require(n_a() == n_t() + n_r(), "ModelParams: k_ac row count != N_T + N_R");
        detail::require(k_cc.rows() == n_c() && k_cc.cols() == n_c(),
                        "ModelParams: k_cc dimension mismatch");
        detail::require(n_c() >= 1, "ModelParams: need at least one tunable load");
        const double sym = (k_cc - k_cc.transpose()).cwiseAbs().maxCoeff();
        detail::require(sym <= kStructuralTol, "ModelParams: k_cc must be symmetric");
    }

    /// Ground-truth parameters of a known cascade and load bank.
    static ModelParams from_cascade(const CascadeModel& k, const LoadBank& bank) {
        const auto& p = k.partition();
        const CMatrix& m = k.smatrix().matrix();
        ModelParams out;
        out.k_rt = detail::take(m, p.set("R"), p.set("T"));
        out.k_ac = detail::take(m, p.merged({"T", "R"}), p.set("C"));
        out.k_cc = detail::take(m, p.set("C"), p.set("C"));
        out.k_cc = (out.k_cc + out.k_cc.transpose()) / 2.0;
        out.r_a = bank.r_a();
        out.r_b = bank.r_b();
        out.check();
        return out;
    }
};

/// Number of real parameters to estimate for a 2-antenna link with n_c
/// tunable loads: two complex reflections plus the unique entries of the
/// RT, AC and CC blocks.
inline int param_count(int n_a, int n_c) {
    detail::require(n_c >= 1, "param_count: no tunable loads (n_c = 0)");
    detail::require(n_a >= 1, "param_count: need at least one antenna port");
    return 4 + ((n_a + n_c) * (n_a + n_c + 1) - 4);
}

/// One observation: a binary configuration and the measured channel.
struct Sample {
    BinaryConfig b;
    CMatrix h;
};

/// Ordered list of observations with consistent shapes.
class Dataset {
public:
    Dataset() = default;
    explicit Dataset(std::vector<Sample> samples, std::optional<double> snr_db = std::nullopt)
        : samples_(std::move(samples)), snr_db_(snr_db) {
        for (const auto& s : samples_) {
            detail::require(s.b.size() == samples_.front().b.size(),
                            "Dataset: configuration lengths differ");
            detail::require(s.h.rows() == samples_.front().h.rows() &&
                            s.h.cols() == samples_.front().h.cols(),
                            "Dataset: channel shapes differ");
        }
    }

    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const Sample& operator[](std::size_t i) const { return samples_[i]; }
    const std::vector<Sample>& samples() const { return samples_; }
    std::optional<double> snr_db() const { return snr_db_; }

    Index n_c() const { return samples_.at(0).b.size(); }
    Index n_r() const { return samples_.at(0).h.rows(); }
    Index n_t() const { return samples_.at(0).h.cols(); }

private:
    std::vector<Sample> samples_;
    std::optional<double> snr_db_;
};

enum class GradientMode { analytic, finite_difference };

struct FitConfig {
    double step = 0.02;            // Adam step size
    int max_iters = 3000;          // per attempt
    std::uint64_t seed = 0;        // initialization seed
    double init_scale = 0.1;       // std dev per component of the k blocks
    double stop_tol = 1e-12;       // train loss at which an attempt stops
    GradientMode gradient = GradientMode::analytic;
    int restarts = 5;              // random restarts, best train loss kept
};

struct FitReport {
    std::vector<double> loss_trajectory; // of the winning attempt
    double train_loss = 0.0;
    int iterations = 0;
    int attempts = 0;
    std::vector<int> diverged_at; // iteration index of any non-finite attempt
};

/// Channel predicted from the fitted blocks alone; never touches the
/// number of RIS elements. Shares the resolvent kernel with the
/// diagonal-route evaluation.
inline CMatrix predict(const ModelParams& p, const BinaryConfig& b) {
    p.check();
    detail::require(b.size() == p.n_c(), "predict: configuration length mismatch");
    const Index na = p.n_a(), nc = p.n_c(), nt = p.n_t();
    CMatrix m = CMatrix::Zero(na + nc, na + nc);
    m.block(nt, 0, p.n_r(), nt) = p.k_rt;
    m.block(0, nt, nt, p.n_r()) = p.k_rt.transpose();
    m.block(0, na, na, nc) = p.k_ac;
    m.block(na, 0, nc, na) = p.k_ac.transpose();
    m.block(na, na, nc, nc) = p.k_cc;
    CMatrix d = CMatrix::Zero(nc, nc);
    for (Index i = 0; i < nc; ++i)
        d(i, i) = p.r_a + (p.r_b - p.r_a) * static_cast<double>(b.bit(i));
    return detail::loaded_coupling(m, index_range(nt, p.n_r()), index_range(0, nt),
                                   index_range(na, nc), d, "predict");
}

namespace detail {

// Real parameter packing: [k_rt, k_ac, k_cc upper triangle, r_a, r_b],
// row-major within blocks, each complex entry as (re, im).
struct ParamLayout {
    Index n_t, n_r, n_c;
    Index n_a() const { return n_t + n_r; }
    Index n_tri() const { return n_c * (n_c + 1) / 2; }
    Index rt_off() const { return 0; }
    Index ac_off() const { return 2 * n_r * n_t; }
    Index cc_off() const { return ac_off() + 2 * n_a() * n_c; }
    Index r_off() const { return cc_off() + 2 * n_tri(); }
    Index total() const { return r_off() + 4; }
};

inline Eigen::VectorXd pack_params(const ModelParams& p) {
    const ParamLayout lay{p.n_t(), p.n_r(), p.n_c()};
    Eigen::VectorXd x(lay.total());
    Index k = 0;
    for (Index i = 0; i < p.n_r(); ++i)
        for (Index j = 0; j < p.n_t(); ++j) {
            x(k++) = p.k_rt(i, j).real();
            x(k++) = p.k_rt(i, j).imag();
        }
    for (Index i = 0; i < p.n_a(); ++i)
        for (Index j = 0; j < p.n_c(); ++j) {
            x(k++) = p.k_ac(i, j).real();
            x(k++) = p.k_ac(i, j).imag();
        }
    for (Index i = 0; i < p.n_c(); ++i)
        for (Index j = i; j < p.n_c(); ++j) {
            x(k++) = p.k_cc(i, j).real();
            x(k++) = p.k_cc(i, j).imag();
        }
    x(k++) = p.r_a.real();
    x(k++) = p.r_a.imag();
    x(k++) = p.r_b.real();
    x(k++) = p.r_b.imag();
    return x;
}

inline ModelParams unpack_params(const Eigen::VectorXd& x, const ParamLayout& lay) {
    ModelParams p;
    p.k_rt.resize(lay.n_r, lay.n_t);
    p.k_ac.resize(lay.n_a(), lay.n_c);
    p.k_cc.resize(lay.n_c, lay.n_c);
    Index k = 0;
    for (Index i = 0; i < lay.n_r; ++i)
        for (Index j = 0; j < lay.n_t; ++j) {
            p.k_rt(i, j) = Complex(x(k), x(k + 1));
            k += 2;
        }
    for (Index i = 0; i < lay.n_a(); ++i)
        for (Index j = 0; j < lay.n_c; ++j) {
            p.k_ac(i, j) = Complex(x(k), x(k + 1));
            k += 2;
        }
    for (Index i = 0; i < lay.n_c; ++i)
        for (Index j = i; j < lay.n_c; ++j) {
            p.k_cc(i, j) = Complex(x(k), x(k + 1));
            p.k_cc(j, i) = p.k_cc(i, j);
            k += 2;
        }
    p.r_a = Complex(x(k), x(k + 1));
    p.r_b = Complex(x(k + 2), x(k + 3));
    return p;
}

// Forward/adjoint evaluator of the successive-difference loss
//   L = sum_m ||(f_{m+1}-f_m) - (h_{m+1}-h_m)||_F^2 / sum_m ||h_{m+1}-h_m||_F^2
// where f is the prediction without its constant RT term (it cancels).
// The gradient is assembled from one adjoint pass using the Wirtinger
// calculus: for holomorphic error E and complex parameter t,
// dL/dRe t = 2 Re(sum conj(E) dE/dt), dL/dIm t = -2 Im(...).
//
// Repeated configurations share one factorization: the forward and
// adjoint passes run over the distinct configurations only, with the
// adjoint weights of coinciding samples accumulated beforehand.
class DiffLoss {
public:
    explicit DiffLoss(const Dataset& d) : data_(&d) {
        const std::size_t m = d.size();
        require(m >= 2, "difference loss: need at least two samples");
        norm_ = 0.0;
        for (std::size_t s = 0; s + 1 < m; ++s)
            norm_ += (d[s + 1].h - d[s].h).squaredNorm();
        require(norm_ > 0.0,
                "difference loss: dataset has no configuration-to-configuration variation");

        std::unordered_map<std::string, std::size_t> seen;
        uidx_.resize(m);
        for (std::size_t s = 0; s < m; ++s) {
            std::string key(static_cast<std::size_t>(d.n_c()), '0');
            for (Index i = 0; i < d.n_c(); ++i) key[static_cast<std::size_t>(i)] += static_cast<char>(d[s].b.bit(i));
            const auto [it, inserted] = seen.emplace(std::move(key), bits_.size());
            if (inserted) {
                Eigen::ArrayXd bits(d.n_c());
                for (Index i = 0; i < d.n_c(); ++i) bits(i) = d[s].b.bit(i);
                bits_.push_back(std::move(bits));
            }
            uidx_[s] = it->second;
        }
    }

    double loss(const ModelParams& p) const {
        std::vector<CMatrix> f;
        forward(p, f, nullptr, nullptr);
        return loss_from(f);
    }

    // Loss and real gradient in the packed layout. The RT block of the
    // gradient is identically zero: constants cancel in differences.
    double loss_and_gradient(const ModelParams& p, Eigen::VectorXd& grad) const {
        const Dataset& d = *data_;
        const std::size_t m = d.size();
        const std::size_t nu = bits_.size();
        const Index nc = p.n_c(), nt = p.n_t(), nr = p.n_r();
        const ParamLayout lay{nt, nr, nc};
        grad = Eigen::VectorXd::Zero(lay.total());

        const CMatrix u = p.k_rc();             // N_R x N_C
        const CMatrix v = p.k_tc().transpose(); // N_C x N_T

        std::vector<CMatrix> f, q, uw;
        forward(p, f, &q, &uw);

        // Accumulate the adjoint weight of every distinct configuration:
        // sample s carries conj(E_{s-1}) - conj(E_s).
        std::vector<CMatrix> e(m - 1);
        double num = 0.0;
        for (std::size_t s = 0; s + 1 < m; ++s) {
            e[s] = (f[uidx_[s + 1]] - f[uidx_[s]]) - (d[s + 1].h - d[s].h);
            num += e[s].squaredNorm();
        }
        std::vector<CMatrix> weight(nu, CMatrix::Zero(nr, nt));
        for (std::size_t s = 0; s < m; ++s) {
            if (s > 0) weight[uidx_[s]] += e[s - 1].conjugate();
            if (s + 1 < m) weight[uidx_[s]] -= e[s].conjugate();
        }

        CMatrix g_u = CMatrix::Zero(nr, nc);
        CMatrix g_v = CMatrix::Zero(nc, nt);
        CMatrix g_k = CMatrix::Zero(nc, nc);
        Complex g_ra = 0.0, g_rb = 0.0;
        CMatrix pmat(nr, nc), b2(nc, nt), x(nc, nt), pw(nc, nt);
        for (std::size_t c = 0; c < nu; ++c) {
            const CMatrix& w = weight[c];
            const auto dvec =
                (p.r_a + (p.r_b - p.r_a) * bits_[c].cast<Complex>()).matrix().eval();
            pmat.noalias() = uw[c] * dvec.asDiagonal(); // U W D
            g_u.noalias() += w * q[c].transpose();
            pw.noalias() = pmat.transpose() * w;
            g_v += pw;
            g_k.noalias() += pw * q[c].transpose();
            b2.noalias() = p.k_cc * q[c];
            b2 += v; // K Q + V
            x.noalias() = uw[c].transpose() * w;
            for (Index i = 0; i < nc; ++i) {
                const Complex row = x.row(i).cwiseProduct(b2.row(i)).sum();
                g_ra += (1.0 - bits_[c](i)) * row;
                g_rb += bits_[c](i) * row;
            }
        }

        // Map Wirtinger sums onto real coordinates of the packed layout.
        const double scale = 2.0 / norm_;
        Index k = lay.ac_off();
        for (Index i = 0; i < lay.n_a(); ++i)
            for (Index j = 0; j < nc; ++j) {
                // row i of k_ac is a T row (enters through V) or an R row
                // (enters through U)
                const Complex s_ij = (i < nt) ? g_v(j, i) : g_u(i - nt, j);
                grad(k++) = scale * s_ij.real();
                grad(k++) = -scale * s_ij.imag();
            }
        for (Index i = 0; i < nc; ++i)
            for (Index j = i; j < nc; ++j) {
                const Complex s_ij = (i == j) ? g_k(i, i) : g_k(i, j) + g_k(j, i);
                grad(k++) = scale * s_ij.real();
                grad(k++) = -scale * s_ij.imag();
            }
        grad(k++) = scale * g_ra.real();
        grad(k++) = -scale * g_ra.imag();
        grad(k++) = scale * g_rb.real();
        grad(k++) = -scale * g_rb.imag();
        return num / norm_;
    }

    // Least-squares recovery of the constant RT block given the final
    // resolvent parameters: the mean residual over the training set.
    CMatrix recover_k_rt(const ModelParams& p) const {
        const Dataset& d = *data_;
        std::vector<CMatrix> f;
        forward(p, f, nullptr, nullptr);
        CMatrix acc = CMatrix::Zero(d.n_r(), d.n_t());
        for (std::size_t s = 0; s < d.size(); ++s) acc += d[s].h - f[uidx_[s]];
        return acc / static_cast<double>(d.size());
    }

    double norm() const { return norm_; }

private:
    // Per distinct configuration: f = U W D V and, when requested for the
    // adjoint pass, Q = W D V and U W.
    void forward(const ModelParams& p, std::vector<CMatrix>& f, std::vector<CMatrix>* q,
                 std::vector<CMatrix>* uw) const {
        const std::size_t nu = bits_.size();
        const Index nc = p.n_c();
        const CMatrix u = p.k_rc();
        const CMatrix v = p.k_tc().transpose();
        const CMatrix ut = u.transpose();
        f.resize(nu);
        if (q) q->resize(nu);
        if (uw) uw->resize(nu);

        CMatrix a(nc, nc), dv(nc, v.cols()), qc(nc, v.cols()), uwt(nc, u.rows());
        Eigen::PartialPivLU<CMatrix> lu;
        for (std::size_t c = 0; c < nu; ++c) {
            for (Index i = 0; i < nc; ++i) {
                const Complex di = p.r_a + (p.r_b - p.r_a) * bits_[c](i);
                a.row(i) = -di * p.k_cc.row(i);
                a(i, i) += 1.0;
                dv.row(i) = di * v.row(i);
            }
            lu.compute(a);
            qc.noalias() = lu.solve(dv);
            f[c].noalias() = u * qc;
            if (q) (*q)[c] = qc;
            if (uw) {
                uwt.noalias() = lu.transpose().solve(ut);
                (*uw)[c] = uwt.transpose();
            }
        }
    }

    double loss_from(const std::vector<CMatrix>& f) const {
        const Dataset& d = *data_;
        double num = 0.0;
        for (std::size_t s = 0; s + 1 < d.size(); ++s)
            num += ((f[uidx_[s + 1]] - f[uidx_[s]]) - (d[s + 1].h - d[s].h)).squaredNorm();
        return num / norm_;
    }

    const Dataset* data_;
    double norm_;
    std::vector<std::size_t> uidx_;      // sample -> distinct configuration
    std::vector<Eigen::ArrayXd> bits_;   // distinct configurations as 0/1
};

} // namespace detail

/// Mean-normalized successive-difference loss (the RT block cancels).
inline double loss(const ModelParams& p, const Dataset& d) {
    p.check();
    detail::require(d.n_c() == p.n_c(), "loss: configuration length mismatch");
    return detail::DiffLoss(d).loss(p);
}

/// Gradient of the loss over all real degrees of freedom in the packed
/// layout [k_rt, k_ac, k_cc triangle, r_a, r_b] (re/im interleaved).
inline Eigen::VectorXd gradient(const ModelParams& p, const Dataset& d,
                                GradientMode mode = GradientMode::analytic) {
    p.check();
    detail::require(d.n_c() == p.n_c(), "gradient: configuration length mismatch");
    const detail::ParamLayout lay{p.n_t(), p.n_r(), p.n_c()};
    detail::DiffLoss dl(d);
    if (mode == GradientMode::analytic) {
        Eigen::VectorXd g;
        dl.loss_and_gradient(p, g);
        return g;
    }
    // Central finite differences, step 1e-6.
    const double h = 1e-6;
    Eigen::VectorXd x = detail::pack_params(p);
    Eigen::VectorXd g(lay.total());
    for (Index i = 0; i < lay.total(); ++i) {
        const double x0 = x(i);
        x(i) = x0 + h;
        const double lp = dl.loss(detail::unpack_params(x, lay));
        x(i) = x0 - h;
        const double lm = dl.loss(detail::unpack_params(x, lay));
        x(i) = x0;
        g(i) = (lp - lm) / (2.0 * h);
    }
    return g;
}

/// First-order fit of the diagonal representation: Adam on the
/// difference loss from random complex initialization, up to
/// cfg.restarts attempts keeping the best train loss, then closed-form
/// recovery of the RT block.
inline std::pair<ModelParams, FitReport> fit(const Dataset& d, const FitConfig& cfg) {
    detail::require(d.size() >= 2, "fit: need at least two samples");
    const detail::ParamLayout lay{d.n_t(), d.n_r(), d.n_c()};
    detail::DiffLoss dl(d);

    FitReport report;
    std::optional<Eigen::VectorXd> best_x;
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_traj;
    int best_iters = 0;

    // An attempt clearly stuck in a bad basin is abandoned early.
    const int plateau_iter = std::max(300, cfg.max_iters * 2 / 5);
    const double plateau_loss = 1e-3;

    for (int attempt = 0; attempt < std::max(1, cfg.restarts); ++attempt) {
        ++report.attempts;
        std::seed_seq sq{cfg.seed, static_cast<std::uint64_t>(attempt)};
        std::mt19937_64 rng(sq);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);

        ModelParams p;
        p.k_rt = CMatrix::Zero(lay.n_r, lay.n_t);
        p.k_ac.resize(lay.n_a(), lay.n_c);
        for (Index i = 0; i < lay.n_a(); ++i)
            for (Index j = 0; j < lay.n_c; ++j)
                p.k_ac(i, j) = cfg.init_scale * Complex(gauss(rng), gauss(rng));
        p.k_cc = CMatrix::Zero(lay.n_c, lay.n_c);
        for (Index i = 0; i < lay.n_c; ++i)
            for (Index j = i; j < lay.n_c; ++j) {
                p.k_cc(i, j) = cfg.init_scale * Complex(gauss(rng), gauss(rng));
                p.k_cc(j, i) = p.k_cc(i, j);
            }
        // distinct random points on the unit disk break the r_a = r_b saddle
        do {
            p.r_a = std::polar(std::sqrt(unif(rng)), 2.0 * kPi * unif(rng));
            p.r_b = std::polar(std::sqrt(unif(rng)), 2.0 * kPi * unif(rng));
        } while (std::abs(p.r_a - p.r_b) < 1e-3);

        Eigen::VectorXd x = detail::pack_params(p);
        Eigen::VectorXd m = Eigen::VectorXd::Zero(lay.total());
        Eigen::VectorXd s = Eigen::VectorXd::Zero(lay.total());
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

        std::vector<double> traj;
        traj.reserve(static_cast<std::size_t>(cfg.max_iters));
        double cur = std::numeric_limits<double>::infinity();
        bool diverged = false;
        int it = 0;
        for (it = 1; it <= cfg.max_iters; ++it) {
            const ModelParams pt = detail::unpack_params(x, lay);
            Eigen::VectorXd g;
            if (cfg.gradient == GradientMode::analytic) {
                cur = dl.loss_and_gradient(pt, g);
            } else {
                cur = dl.loss(pt);
                g = gradient(pt, d, GradientMode::finite_difference);
            }
            if (!std::isfinite(cur)) {
                report.diverged_at.push_back(it);
                diverged = true;
                break;
            }
            traj.push_back(cur);
            if (cur < cfg.stop_tol) break;
            if (it == plateau_iter && cur > plateau_loss) break;
            m = b1 * m + (1.0 - b1) * g;
            s = b2 * s + (1.0 - b2) * g.cwiseProduct(g);
            const double c1 = 1.0 - std::pow(b1, it);
            const double c2 = 1.0 - std::pow(b2, it);
            x.array() -= cfg.step * (m.array() / c1) / ((s.array() / c2).sqrt() + eps);
        }
        if (!diverged && cur < best_loss) {
            best_loss = cur;
            best_x = x;
            best_traj = std::move(traj);
            best_iters = std::min(it, cfg.max_iters);
        }
        if (best_loss < cfg.stop_tol) break;
    }

    if (!best_x) {
        std::ostringstream os;
        os << "fit: loss became non-finite in every attempt (first at iteration "
           << (report.diverged_at.empty() ? 0 : report.diverged_at.front())
           << "); step size " << cfg.step << " likely too large";
        throw NumericalError(os.str());
    }

    ModelParams p = detail::unpack_params(*best_x, lay);
    p.k_rt = dl.recover_k_rt(p);
    report.loss_trajectory = std::move(best_traj);
    report.train_loss = best_loss;
    report.iterations = best_iters;
    return {std::move(p), std::move(report)};
}

/// Ground-truth dataset: n uniformly random configurations pushed through
/// the physical model, with optional per-sample complex Gaussian noise at
/// the requested SNR. Deterministic in the seed.
inline Dataset generate_dataset(const RadioEnvironment& env, const StaticLoadCircuit& slc,
                                const LoadBank& bank, std::size_t n, std::uint64_t seed,
                                std::optional<double> snr_db = std::nullopt) {
    detail::require(n >= 1, "generate_dataset: need at least one sample");
    const CascadeModel k = build_k(env, slc);
    std::mt19937_64 rng(seed);
    // separate noise stream: the drawn configurations do not depend on
    // whether noise is requested
    std::mt19937_64 noise_rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Sample> samples;
    samples.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        BinaryConfig b = BinaryConfig::random(slc.n_c(), rng);
        CMatrix h = channel_diagonal(k, il_matrix(b, bank));
        if (snr_db) {
            const double snr_lin = std::pow(10.0, *snr_db / 10.0);
            const double sigma2 =
                h.squaredNorm() / (snr_lin * static_cast<double>(h.size()));
            const double sigma = std::sqrt(sigma2 / 2.0);
            for (Index i = 0; i < h.rows(); ++i)
                for (Index j = 0; j < h.cols(); ++j)
                    h(i, j) += Complex(sigma * gauss(noise_rng), sigma * gauss(noise_rng));
        }
        samples.push_back(Sample{std::move(b), std::move(h)});
    }
    return Dataset(std::move(samples), snr_db);
}

/// Prediction quality in dB: 10 log10( sum||pred-truth||^2 / sum||truth||^2 ).
inline double nmse_db(const std::vector<CMatrix>& predicted, const std::vector<CMatrix>& truth) {
    detail::require(predicted.size() == truth.size() && !truth.empty(),
                    "nmse_db: size mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        num += (predicted[i] - truth[i]).squaredNorm();
        den += truth[i].squaredNorm();
    }
    return 10.0 * std::log10(num / den);
}

// ---------------------------------------------------------------------------
// Serialization: dataset CSV and parameter JSON.

/// CSV columns: b_1..b_NC, then re_h_<i>_<j> for all entries (row-major),
/// then im_h_<i>_<j>. A leading "# snr_db=<v>" line records noise metadata.
inline void save_dataset_csv(const Dataset& d, const std::filesystem::path& path) {
    detail::require(!d.empty(), "save_dataset_csv: empty dataset");
    std::ofstream out(path);
    if (!out) throw ParseError("save_dataset_csv: cannot open " + path.string());
    if (d.snr_db()) out << "# snr_db=" << detail::format_double(*d.snr_db()) << "\n";
    for (Index i = 0; i < d.n_c(); ++i) out << "b_" << (i + 1) << ",";
    for (Index i = 0; i < d.n_r(); ++i)
        for (Index j = 0; j < d.n_t(); ++j)
            out << "re_h_" << (i + 1) << "_" << (j + 1) << ",";
    for (Index i = 0; i < d.n_r(); ++i)
        for (Index j = 0; j < d.n_t(); ++j) {
            out << "im_h_" << (i + 1) << "_" << (j + 1);
            out << (i + 1 == d.n_r() && j + 1 == d.n_t() ? "\n" : ",");
        }
    for (const auto& s : d.samples()) {
        for (Index i = 0; i < d.n_c(); ++i) out << s.b.bit(i) << ",";
        for (Index i = 0; i < d.n_r(); ++i)
            for (Index j = 0; j < d.n_t(); ++j)
                out << detail::format_double(s.h(i, j).real()) << ",";
        for (Index i = 0; i < d.n_r(); ++i)
            for (Index j = 0; j < d.n_t(); ++j) {
                out << detail::format_double(s.h(i, j).imag());
                out << (i + 1 == d.n_r() && j + 1 == d.n_t() ? "\n" : ",");
            }
    }
    if (!out) throw ParseError("save_dataset_csv: write failed for " + path.string());
}

inline Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_dataset_csv: cannot open " + path.string());
    std::optional<double> snr;
    std::string line;
    while (std::getline(in, line) && !line.empty() && line[0] == '#') {
        if (const auto pos = line.find("snr_db="); pos != std::string::npos)
            snr = std::strtod(line.c_str() + pos + 7, nullptr);
    }
    // `line` now holds the header
    std::vector<std::string> cols;
    {
        std::istringstream hs(line);
        std::string c;
        while (std::getline(hs, c, ',')) cols.push_back(c);
    }
    Index n_c = 0, n_r = 0, n_t = 0;
    for (const auto& c : cols) {
        if (c.rfind("b_", 0) == 0) {
            ++n_c;
        } else if (c.rfind("re_h_", 0) == 0) {
            Index i = 0, j = 0;
            if (std::sscanf(c.c_str(), "re_h_%td_%td", &i, &j) != 2)
                throw ParseError("load_dataset_csv: bad column name '" + c + "'");
            n_r = std::max(n_r, i);
            n_t = std::max(n_t, j);
        }
    }
    if (n_c == 0 || n_r == 0 || n_t == 0)
        throw ParseError("load_dataset_csv: missing b/h columns in header");
    const std::size_t expected = static_cast<std::size_t>(n_c + 2 * n_r * n_t);
    if (cols.size() != expected)
        throw ParseError("load_dataset_csv: column count does not match header dimensions");

    std::vector<Sample> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        std::vector<double> vals;
        while (std::getline(ls, cell, ',')) vals.push_back(std::strtod(cell.c_str(), nullptr));
        if (vals.size() != expected) throw ParseError("load_dataset_csv: short data row");
        std::vector<int> bits(static_cast<std::size_t>(n_c));
        for (Index i = 0; i < n_c; ++i) bits[static_cast<std::size_t>(i)] = static_cast<int>(vals[static_cast<std::size_t>(i)]);
        CMatrix h(n_r, n_t);
        std::size_t off = static_cast<std::size_t>(n_c);
        for (Index i = 0; i < n_r; ++i)
            for (Index j = 0; j < n_t; ++j) {
                h(i, j) = Complex(vals[off], vals[off + static_cast<std::size_t>(n_r * n_t)]);
                ++off;
            }
        samples.push_back(Sample{BinaryConfig(std::move(bits)), std::move(h)});
    }
    if (samples.empty()) throw ParseError("load_dataset_csv: no data rows");
    return Dataset(std::move(samples), snr);
}

namespace detail {

inline nlohmann::json complex_to_json(Complex c) {
    return nlohmann::json::array({c.real(), c.imag()});
}

inline nlohmann::json cmatrix_to_json(const CMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Complex json_to_complex(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
        throw ParseError("params json: complex values must be [re, im]");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

inline CMatrix json_to_cmatrix(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw ParseError("params json: bad matrix");
    const Index rows = static_cast<Index>(j.size());
    const Index cols = static_cast<Index>(j[0].size());
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        if (static_cast<Index>(j[i].size()) != cols)
            throw ParseError("params json: ragged matrix");
        for (Index jj = 0; jj < cols; ++jj) m(i, jj) = json_to_complex(j[i][jj]);
    }
    return m;
}

} // namespace detail

inline void save_params_json(const ModelParams& p, const std::filesystem::path& path) {
    p.check();
    nlohmann::json j;
    j["n_t"] = p.n_t();
    j["n_r"] = p.n_r();
    j["n_c"] = p.n_c();
    j["k_rt"] = detail::cmatrix_to_json(p.k_rt);
    j["k_ac"] = detail::cmatrix_to_json(p.k_ac);
    j["k_cc"] = detail::cmatrix_to_json(p.k_cc);
    j["r_a"] = detail::complex_to_json(p.r_a);
    j["r_b"] = detail::complex_to_json(p.r_b);
    std::ofstream out(path);
    if (!out) throw ParseError("save_params_json: cannot open " + path.string());
    out << j.dump(2) << "\n";
}

inline ModelParams load_params_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_params_json: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("load_params_json: ") + e.what());
    }
    ModelParams p;
    p.k_rt = detail::json_to_cmatrix(j.at("k_rt"));
    p.k_ac = detail::json_to_cmatrix(j.at("k_ac"));
    p.k_cc = detail::json_to_cmatrix(j.at("k_cc"));
    p.r_a = detail::json_to_complex(j.at("r_a"));
    p.r_b = detail::json_to_complex(j.at("r_b"));
    p.check();
    return p;
}

} // namespace bdris
