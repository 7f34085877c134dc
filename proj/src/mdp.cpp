#include "renewal/mdp.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "renewal/core.hpp"

namespace renewal {

void MdpSpec::validate() const {
    if (states == 0 || actions == 0) throw ConfigError("MDP needs at least one state and action");
    if (transitions.size() != actions) {
        throw ConfigError("MDP has " + std::to_string(transitions.size()) +
                          " transition matrices for " + std::to_string(actions) + " actions");
    }
    for (std::size_t a = 0; a < actions; ++a) {
        if (transitions[a].size() != states) throw ConfigError("transition matrix has wrong row count");
        for (std::size_t s = 0; s < states; ++s) {
            const auto& row = transitions[a][s];
            if (row.size() != states) throw ConfigError("transition row has wrong length");
            double sum = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || !std::isfinite(p)) {
                    throw ConfigError("transition probabilities must be finite and nonnegative");
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                throw ConfigError("transition row (a=" + std::to_string(a) + ", s=" +
                                  std::to_string(s) + ") sums to " + std::to_string(sum));
            }
        }
    }
}

PolyhedronTheta build_polyhedron(const MdpSpec& mdp) {
    mdp.validate();
    PolyhedronTheta poly;
    poly.states = mdp.states;
    poly.actions = mdp.actions;
    const std::size_t S = mdp.states;
    const std::size_t A = mdp.actions;
    // The S balance rows sum to zero; the last one is dropped.
    for (std::size_t next = 0; next + 1 < S; ++next) {
        std::vector<double> row(S * A, 0.0);
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t a = 0; a < A; ++a) row[s * A + a] += mdp.prob(s, a, next);
        }
        for (std::size_t a = 0; a < A; ++a) row[next * A + a] -= 1.0;
        poly.eq.push_back(std::move(row));
        poly.rhs.push_back(0.0);
    }
    poly.eq.emplace_back(S * A, 1.0);
    poly.rhs.push_back(1.0);
    return poly;
}

double membership_residual(const PolyhedronTheta& poly, const std::vector<double>& theta) {
    if (theta.size() != poly.dim()) throw DimensionError("theta has the wrong dimension");
    double r = 0.0;
    for (std::size_t i = 0; i < poly.eq.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) s += poly.eq[i][j] * theta[j];
        r = std::max(r, std::abs(s - poly.rhs[i]));
    }
    for (double v : theta) r = std::max(r, -v);
    return r;
}

std::vector<double> stationary_distribution(const MdpSpec& mdp, const Matrix& policy) {
    const std::size_t S = mdp.states;
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S),
                                              static_cast<Eigen::Index>(S));
    // Rows: (P_pi^T - I) d = 0, last row replaced by sum d = 1.
    for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < mdp.actions; ++a) {
            const double w = policy[s][a];
            if (w == 0.0) continue;
            for (std::size_t n = 0; n < S; ++n) {
                M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(s)) += w * mdp.prob(s, a, n);
            }
        }
    }
    M -= Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(S));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(S));
    M.row(static_cast<Eigen::Index>(S) - 1).setOnes();
    rhs(static_cast<Eigen::Index>(S) - 1) = 1.0;
    const Eigen::VectorXd d = M.fullPivLu().solve(rhs);
    std::vector<double> out(S);
    for (std::size_t s = 0; s < S; ++s) out[s] = std::max(d(static_cast<Eigen::Index>(s)), 0.0);
    return out;
}

std::vector<double> stationary_theta(const MdpSpec& mdp, const Matrix& policy) {
    const std::vector<double> d = stationary_distribution(mdp, policy);
    std::vector<double> theta(mdp.states * mdp.actions);
    for (std::size_t s = 0; s < mdp.states; ++s) {
        for (std::size_t a = 0; a < mdp.actions; ++a) theta[s * mdp.actions + a] = d[s] * policy[s][a];
    }
    return theta;
}

Matrix uniform_policy(std::size_t states, std::size_t actions) {
    return Matrix(states, std::vector<double>(actions, 1.0 / static_cast<double>(actions)));
}

Matrix recover_policy(const PolyhedronTheta& poly, const std::vector<double>& theta,
                      double zero_tol) {
    const std::size_t A = poly.actions;
    Matrix pi(poly.states, std::vector<double>(A, 1.0 / static_cast<double>(A)));
    for (std::size_t s = 0; s < poly.states; ++s) {
        double marginal = 0.0;
        for (std::size_t a = 0; a < A; ++a) marginal += std::max(theta[s * A + a], 0.0);
        if (marginal <= zero_tol) continue;
        for (std::size_t a = 0; a < A; ++a) pi[s][a] = std::max(theta[s * A + a], 0.0) / marginal;
    }
    return pi;
}

}  // namespace renewal
