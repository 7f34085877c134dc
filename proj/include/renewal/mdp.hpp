#pragma once

// Finite MDP transition structure and its state-action polyhedron
//   Theta = { theta >= 0 : sum theta = 1, balance rows }.
// Occupation vectors are indexed theta[s * actions + a].

#include <cstddef>
#include <vector>

#include "renewal/lp.hpp"

namespace renewal {

struct MdpSpec {
    std::size_t states = 0;
    std::size_t actions = 0;
    // transitions[a][s][s']
    std::vector<Matrix> transitions;

    // Throws ConfigError when shapes are wrong or a row is not stochastic.
    void validate() const;
    double prob(std::size_t s, std::size_t a, std::size_t next) const {
        return transitions[a][s][next];
    }
};

struct PolyhedronTheta {
    std::size_t states = 0;
    std::size_t actions = 0;
    // Affine description: eq * theta = rhs (balance rows with one redundant
    // row dropped, followed by the simplex row).
    Matrix eq;
    std::vector<double> rhs;

    std::size_t dim() const { return states * actions; }
};

PolyhedronTheta build_polyhedron(const MdpSpec& mdp);

// max of affine residual |eq*theta - rhs| and negativity (-theta)_+.
double membership_residual(const PolyhedronTheta& poly, const std::vector<double>& theta);

// Stationary distribution of the chain induced by policy[s][a].
std::vector<double> stationary_distribution(const MdpSpec& mdp, const Matrix& policy);

// Occupation measure d(s) * policy(a|s) of a randomized stationary policy.
std::vector<double> stationary_theta(const MdpSpec& mdp, const Matrix& policy);

Matrix uniform_policy(std::size_t states, std::size_t actions);

// pi(a|s) = theta(s,a) / sum_a theta(s,a); states with zero marginal get
// the uniform distribution.
Matrix recover_policy(const PolyhedronTheta& poly, const std::vector<double>& theta,
                      double zero_tol = 1e-14);

}  // namespace renewal
