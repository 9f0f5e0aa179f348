#pragma once

#include "scopefe/assoc.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace scopefe {

/// Strict partition of the features into K groups.
struct HardAssignment {
    std::vector<int> labels;
    int k = 0;
};

/// Multi-label assignment; every feature carries at least one label.
struct SoftAssignment {
    std::vector<std::vector<int>> labels;
    int k = 0;
    double theta = 0.0;
};

using ClusterAssignment = std::variant<HardAssignment, SoftAssignment>;

/// Row-normalized spectral embedding of the features.
struct Embedding {
    /// d x q, unit-norm rows.
    Eigen::MatrixXd x;
    int q = 0;
    /// Retained eigenpairs of the normalized similarity, descending.
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;
    /// Deg^{-1/2} S Deg^{-1/2}
    Eigen::MatrixXd normalized;
};

struct Membership {
    /// d x K, rows sum to one.
    Eigen::MatrixXd u;
    /// K x q centroids.
    Eigen::MatrixXd centroids;
    /// Objective value after seeding and after every iteration.
    std::vector<double> objective;
    int iterations = 0;
    bool converged = false;
};

struct FcmParams {
    double m = 2.0;
    double tol = 1e-5;
    int max_iter = 300;
};

/// max(2, ceil(d / tau)), never more than d.
int cluster_count(std::size_t d, int tau);

/// Average-linkage agglomerative clustering on 1 - S down to
/// cluster_count(d, tau) groups. Labels are numbered by smallest member.
HardAssignment hard_cluster(const SimilarityMatrix& s, int tau);

/// Top min(2K, d-1) eigenvectors of the symmetrically normalized
/// similarity, each with its largest-magnitude entry made positive, then
/// row-normalized.
Embedding spectral_embed(const SimilarityMatrix& s, int k);

/// Fuzzy c-means with farthest-point seeding.
Membership fcm(const Eigen::MatrixXd& x, int k, const FcmParams& params, std::uint64_t seed);

/// FCM objective sum_i sum_k u_ik^m |x_i - v_k|^2.
double fcm_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                     const Eigen::MatrixXd& centroids, double m);

/// Thresholds memberships at theta (K/10 when theta is negative), falling
/// back to the argmax cluster.
SoftAssignment soft_assign(const Eigen::MatrixXd& u, int k, double theta = -1.0);

bool pair_allowed(const HardAssignment& a, std::size_t i, std::size_t j);
bool pair_allowed(const SoftAssignment& a, std::size_t i, std::size_t j);
bool pair_allowed(const ClusterAssignment& a, std::size_t i, std::size_t j);

/// Label sets per feature (singletons for hard assignments).
std::vector<std::vector<int>> label_sets(const ClusterAssignment& a);

}  // namespace scopefe
