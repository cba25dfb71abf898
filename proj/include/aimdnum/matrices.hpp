#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "aimdnum/core.hpp"
#include "aimdnum/random.hpp"

namespace aimdnum {

/// Minimal dense row-major matrix; n stays small wherever these are built,
/// the chain step itself is matrix-free (see apply_aimd_step).
struct Matrix {
    std::size_t rows = 0, cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    Vec apply(const Vec& x) const {
        if (x.size() != cols) throw std::invalid_argument("Matrix::apply: dimension mismatch");
        Vec y(rows, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols; ++j) s += data[i * cols + j] * x[j];
            y[i] = s;
        }
        return y;
    }
};

/// Which agents back off at an event; selects one of the 2^n AIMD matrices.
struct DropPattern {
    std::vector<std::uint8_t> drops; // 1 = back off (beta_i), 0 = keep (1)

    static DropPattern all(std::size_t n, bool drop) {
        return DropPattern{std::vector<std::uint8_t>(n, drop ? 1 : 0)};
    }
    std::size_t size() const { return drops.size(); }
};

struct AimdMatrix {
    Matrix m;
    DropPattern pattern;
};

enum class LiftKind { window, longterm };

struct LiftedMatrix {
    Matrix m;
    LiftKind kind;
    std::size_t n = 0;
    std::size_t window = 0;  // T for the window lift
    long event_index = 0;    // k for the long-term lift
};

inline void check_aimd_params(const Vec& alpha, const Vec& beta) {
    if (alpha.size() != beta.size() || alpha.empty())
        throw std::invalid_argument("AIMD params: size mismatch");
    for (double a : alpha)
        if (!(a > 0.0)) throw std::invalid_argument("AIMD params: alpha must be interior");
    for (double b : beta)
        if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("AIMD params: beta outside (0,1)");
}

// diag(beta~) + alpha (e - beta~)^T, column stochastic by construction.
inline AimdMatrix build_aimd_matrix(const Vec& alpha, const Vec& beta, const DropPattern& pattern) {
    check_aimd_params(alpha, beta);
    const std::size_t n = alpha.size();
    if (pattern.size() != n) throw std::invalid_argument("build_aimd_matrix: pattern size mismatch");
    Matrix m(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double bt = pattern.drops[j] ? beta[j] : 1.0;
        for (std::size_t i = 0; i < n; ++i) m.at(i, j) = alpha[i] * (1.0 - bt);
        m.at(j, j) += bt;
    }
    return AimdMatrix{std::move(m), pattern};
}

// One chain step without forming the matrix: y = beta~ o x + alpha <e - beta~, x>.
inline void apply_aimd_step(const Vec& alpha, const Vec& beta,
                            const std::vector<std::uint8_t>& drops, Vec& x) {
    double freed = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (drops[i]) {
            freed += (1.0 - beta[i]) * x[i];
            x[i] *= beta[i];
        }
    }
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha[i] * freed;
}

// Positive eigenvector of A_1 at eigenvalue 1, entries proportional to
// alpha_i / (1 - beta_i).
inline SimplexPoint perron_vector(const Vec& alpha, const Vec& beta) {
    check_aimd_params(alpha, beta);
    Vec z(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        z[i] = alpha[i] / (1.0 - beta[i]);
        sum += z[i];
    }
    for (auto& v : z) v /= sum;
    return SimplexPoint(std::move(z));
}

// Induced 1-norm of M restricted to V = {e^T x = 0}, computed exactly on the
// extreme points (e_i - e_j)/2 of the unit 1-ball in V.
inline double restricted_v_norm(const Matrix& m) {
    if (m.rows < 2) throw std::invalid_argument("restricted_v_norm: need n >= 2");
    double best = 0.0;
    for (std::size_t i = 0; i < m.cols; ++i) {
        for (std::size_t j = i + 1; j < m.cols; ++j) {
            double s = 0.0;
            for (std::size_t r = 0; r < m.rows; ++r) s += std::abs(m.at(r, i) - m.at(r, j));
            best = std::max(best, s / 2.0);
        }
    }
    return best;
}

inline double contraction_factor(const Vec& alpha, const Vec& beta) {
    if (alpha.size() < 2) throw std::invalid_argument("contraction_factor: need n >= 2");
    const auto a1 = build_aimd_matrix(alpha, beta, DropPattern::all(alpha.size(), true));
    return restricted_v_norm(a1.m);
}

// Row block i (1-based) carries (1/i)A in column block 1 and ((i-1)/i)I on the
// subdiagonal block; for i = 2 the two contributions both land in column
// block 1.
inline LiftedMatrix build_lifted_window_matrix(const AimdMatrix& a, std::size_t T) {
    if (T < 1) throw std::invalid_argument("build_lifted_window_matrix: T must be >= 1");
    const std::size_t n = a.m.rows;
    Matrix m(T * n, T * n);
    for (std::size_t bi = 1; bi <= T; ++bi) {
        const double wa = 1.0 / static_cast<double>(bi);
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
                m.at((bi - 1) * n + r, c) += wa * a.m.at(r, c);
        if (bi >= 2) {
            const double wi = static_cast<double>(bi - 1) / static_cast<double>(bi);
            for (std::size_t r = 0; r < n; ++r)
                m.at((bi - 1) * n + r, (bi - 2) * n + r) += wi;
        }
    }
    return LiftedMatrix{std::move(m), LiftKind::window, n, T, 0};
}

// [[A, 0], [A/(k+2), (k+1)/(k+2) I]] acting on stacked (x, xbar).
inline LiftedMatrix build_lifted_longterm_matrix(const AimdMatrix& a, long k) {
    if (k < 0) throw std::invalid_argument("build_lifted_longterm_matrix: k must be >= 0");
    const std::size_t n = a.m.rows;
    const double w = 1.0 / static_cast<double>(k + 2);
    Matrix m(2 * n, 2 * n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            m.at(r, c) = a.m.at(r, c);
            m.at(n + r, c) = w * a.m.at(r, c);
        }
        m.at(n + r, n + r) = 1.0 - w;
    }
    return LiftedMatrix{std::move(m), LiftKind::longterm, n, 0, k};
}

// Max of block 1-norms over T stacked n-blocks.
inline double window_norm(const Vec& z, std::size_t T) {
    if (T == 0 || z.size() % T != 0) throw std::invalid_argument("window_norm: bad stacking");
    const std::size_t n = z.size() / T;
    double best = 0.0;
    for (std::size_t b = 0; b < T; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += std::abs(z[b * n + i]);
        best = std::max(best, s);
    }
    return best;
}

inline double pair_norm(const Vec& v) {
    if (v.size() % 2 != 0) throw std::invalid_argument("pair_norm: odd dimension");
    return window_norm(v, 2);
}

struct LiftedBoundReport {
    double c = 0.0;        // ||A1|V||_1
    double bound = 0.0;    // (c + T - 1)/T
    double measured = 0.0; // sampled restricted norm of A_{T,1} on W
    bool ok = false;
};

// Measures ||A_{T,1} z||_T / ||z||_T on generator directions of W (per-block
// signed pairs e_i - e_j). This is a sampling certificate, not an exact norm
// computation for T > 1.
inline LiftedBoundReport lifted_contraction_bound_check(const Vec& alpha, const Vec& beta,
                                                        std::size_t T, std::size_t samples = 512,
                                                        std::uint64_t seed = 0) {
    const std::size_t n = alpha.size();
    if (n < 2) throw std::invalid_argument("lifted_contraction_bound_check: need n >= 2");
    LiftedBoundReport report;
    report.c = contraction_factor(alpha, beta);
    report.bound = (report.c + static_cast<double>(T) - 1.0) / static_cast<double>(T);

    const auto a1 = build_aimd_matrix(alpha, beta, DropPattern::all(n, true));
    const auto lifted = build_lifted_window_matrix(a1, T);

    Rng rng(seed * 2654435761u + 97531u);
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        Vec z(T * n, 0.0);
        for (std::size_t b = 0; b < T; ++b) {
            std::size_t i = rng.index(n);
            std::size_t j = rng.index(n);
            while (j == i) j = rng.index(n);
            z[b * n + i] = 0.5;
            z[b * n + j] = -0.5;
        }
        worst = std::max(worst, window_norm(lifted.m.apply(z), T));
    }
    // Deterministic sweep: the same generator direction repeated in every
    // block, all ordered pairs.
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            Vec z(T * n, 0.0);
            for (std::size_t b = 0; b < T; ++b) {
                z[b * n + i] = 0.5;
                z[b * n + j] = -0.5;
            }
            worst = std::max(worst, window_norm(lifted.m.apply(z), T));
        }
    }
    report.measured = worst;
    report.ok = report.measured <= report.bound + 1e-10;
    return report;
}

} // namespace aimdnum
