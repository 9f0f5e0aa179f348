#include "scopefe/cluster.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <limits>
#include <numeric>

namespace scopefe {

int cluster_count(std::size_t d, int tau) {
    if (d < 2) throw Error("cluster_count: need d >= 2");
    if (tau < 1) throw Error("cluster_count: tau must be >= 1");
    const std::size_t t = static_cast<std::size_t>(tau);
    const std::size_t k = std::max<std::size_t>(2, (d + t - 1) / t);
    return static_cast<int>(std::min(k, d));
}

HardAssignment hard_cluster(const SimilarityMatrix& s, int tau) {
    const std::size_t d = s.order();
    const int k = cluster_count(d, tau);

    // Members kept sorted so members.front() is the cluster's smallest index.
    std::vector<std::vector<std::size_t>> clusters(d);
    for (std::size_t i = 0; i < d; ++i) clusters[i] = {i};

    auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
        double sum = 0.0;
        for (std::size_t i : a)
            for (std::size_t j : b) sum += 1.0 - s(i, j);
        return sum / static_cast<double>(a.size() * b.size());
    };

    while (clusters.size() > static_cast<std::size_t>(k)) {
        // clusters stay ordered by smallest member, so the first minimum in
        // (a, b) scan order is the lowest pair of smallest member indices.
        std::size_t best_a = 0, best_b = 1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < clusters.size(); ++a) {
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                const double dist = linkage(clusters[a], clusters[b]);
                if (dist < best) {
                    best = dist;
                    best_a = a;
                    best_b = b;
                }
            }
        }
        auto& merged = clusters[best_a];
        merged.insert(merged.end(), clusters[best_b].begin(), clusters[best_b].end());
        std::sort(merged.begin(), merged.end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
    }

    HardAssignment out;
    out.k = k;
    out.labels.assign(d, 0);
    for (std::size_t c = 0; c < clusters.size(); ++c) {
        for (std::size_t i : clusters[c]) out.labels[i] = static_cast<int>(c);
    }
    return out;
}

Embedding spectral_embed(const SimilarityMatrix& s, int k) {
    const auto d = static_cast<Eigen::Index>(s.order());
    if (d < 2) throw Error("spectral_embed: need d >= 2");
    if (k < 1) throw Error("spectral_embed: K must be >= 1");
    const Eigen::Index q = std::min<Eigen::Index>(2 * static_cast<Eigen::Index>(k), d - 1);

    const Eigen::VectorXd degree = s.values.rowwise().sum();
    if ((degree.array() <= 0.0).any()) throw Error("spectral_embed: non-positive degree");
    const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
    Eigen::MatrixXd a = inv_sqrt.asDiagonal() * s.values * inv_sqrt.asDiagonal();
    a = 0.5 * (a + a.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success) {
        throw Error("spectral_embed: eigendecomposition did not converge");
    }

    Embedding out;
    out.q = static_cast<int>(q);
    out.normalized = a;
    out.eigenvalues.resize(q);
    out.eigenvectors.resize(d, q);
    for (Eigen::Index c = 0; c < q; ++c) {
        const Eigen::Index src = d - 1 - c;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.eigenvalues(c) = solver.eigenvalues()(src);
        out.eigenvectors.col(c) = v;
        const double residual =
            (a * v - out.eigenvalues(c) * v).cwiseAbs().maxCoeff();
        if (residual > 1e-6) {
            throw Error("spectral_embed: eigenpair residual " + std::to_string(residual) +
                        " exceeds tolerance");
        }
    }

    out.x = out.eigenvectors;
    for (Eigen::Index i = 0; i < d; ++i) {
        const double norm = out.x.row(i).norm();
        if (norm > 0.0) {
            out.x.row(i) /= norm;
        } else {
            // Degenerate row: no spectral signal, park it on the first axis.
            out.x.row(i).setZero();
            out.x(i, 0) = 1.0;
        }
    }
    return out;
}

double fcm_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u,
                     const Eigen::MatrixXd& centroids, double m) {
    double j = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double w = u(i, c) == 0.0 ? 0.0 : std::pow(u(i, c), m);
            j += w * (x.row(i) - centroids.row(c)).squaredNorm();
        }
    }
    return j;
}

namespace {

Eigen::MatrixXd update_membership(const Eigen::MatrixXd& x, const Eigen::MatrixXd& v, double m) {
    const Eigen::Index d = x.rows(), k = v.rows();
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, k);
    Eigen::VectorXd dist(k);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::Index zero_at = -1;
        for (Eigen::Index c = 0; c < k; ++c) {
            dist(c) = (x.row(i) - v.row(c)).squaredNorm();
            if (dist(c) == 0.0 && zero_at < 0) zero_at = c;
        }
        if (zero_at >= 0) {
            u(i, zero_at) = 1.0;
            continue;
        }
        // u_ik proportional to dist_ik^{-1/(m-1)}, normalized in log space
        // so that m close to 1 neither overflows nor underflows.
        Eigen::VectorXd logits = -dist.array().log() / (m - 1.0);
        const double top = logits.maxCoeff();
        Eigen::VectorXd w = (logits.array() - top).exp();
        u.row(i) = (w / w.sum()).transpose();
    }
    return u;
}

void update_centroids(const Eigen::MatrixXd& x, const Eigen::MatrixXd& u, double m,
                      Eigen::MatrixXd& v) {
    for (Eigen::Index c = 0; c < v.rows(); ++c) {
        Eigen::RowVectorXd num = Eigen::RowVectorXd::Zero(x.cols());
        double den = 0.0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            if (u(i, c) == 0.0) continue;
            const double w = std::pow(u(i, c), m);
            num += w * x.row(i);
            den += w;
        }
        if (den > 0.0) v.row(c) = num / den;
    }
}

}  // namespace

Membership fcm(const Eigen::MatrixXd& x, int k, const FcmParams& params, std::uint64_t seed) {
    const Eigen::Index d = x.rows();
    if (!(params.m > 1.0)) {
        throw Error("fcm: fuzziness m must be > 1 (m = 1 is hard clustering)");
    }
    if (k < 1) throw Error("fcm: K must be >= 1");
    if (k > d) throw Error("fcm: K exceeds the number of points");

    // Farthest-point seeding.
    Eigen::MatrixXd v(k, x.cols());
    Rng rng(derive_seed(seed, "fcm-seed"));
    Eigen::Index first = static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::uint64_t>(d)));
    v.row(0) = x.row(first);
    Eigen::VectorXd nearest(d);
    for (Eigen::Index i = 0; i < d; ++i) nearest(i) = (x.row(i) - v.row(0)).squaredNorm();
    for (int c = 1; c < k; ++c) {
        Eigen::Index pick = 0;
        nearest.maxCoeff(&pick);
        v.row(c) = x.row(pick);
        for (Eigen::Index i = 0; i < d; ++i) {
            nearest(i) = std::min(nearest(i), (x.row(i) - v.row(c)).squaredNorm());
        }
    }

    Membership out;
    Eigen::MatrixXd u = update_membership(x, v, params.m);
    out.objective.push_back(fcm_objective(x, u, v, params.m));
    for (int it = 0; it < params.max_iter; ++it) {
        update_centroids(x, u, params.m, v);
        Eigen::MatrixXd next = update_membership(x, v, params.m);
        const double change = (next - u).cwiseAbs().maxCoeff();
        u = std::move(next);
        out.objective.push_back(fcm_objective(x, u, v, params.m));
        out.iterations = it + 1;
        if (change < params.tol) {
            out.converged = true;
            break;
        }
    }
    out.u = std::move(u);
    out.centroids = std::move(v);
    return out;
}

SoftAssignment soft_assign(const Eigen::MatrixXd& u, int k, double theta) {
    if (k < 1 || u.cols() != k) throw Error("soft_assign: membership has wrong column count");
    SoftAssignment out;
    out.k = k;
    out.theta = theta < 0.0 ? static_cast<double>(k) / 10.0 : theta;
    if (out.theta >= 1.0) {
        spdlog::warn("soft_assign: threshold {} is unreachable; every feature falls back "
                     "to its argmax cluster",
                     out.theta);
    }
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        std::vector<int> labels;
        for (int c = 0; c < k; ++c) {
            if (u(i, c) >= out.theta) labels.push_back(c);
        }
        if (labels.empty()) {
            Eigen::Index arg = 0;
            u.row(i).maxCoeff(&arg);
            labels.push_back(static_cast<int>(arg));
        }
        out.labels.push_back(std::move(labels));
    }
    return out;
}

bool pair_allowed(const HardAssignment& a, std::size_t i, std::size_t j) {
    return a.labels.at(i) == a.labels.at(j);
}

bool pair_allowed(const SoftAssignment& a, std::size_t i, std::size_t j) {
    const auto& x = a.labels.at(i);
    const auto& y = a.labels.at(j);
    return std::any_of(x.begin(), x.end(),
                       [&](int l) { return std::find(y.begin(), y.end(), l) != y.end(); });
}

bool pair_allowed(const ClusterAssignment& a, std::size_t i, std::size_t j) {
    return std::visit([&](const auto& v) { return pair_allowed(v, i, j); }, a);
}

std::vector<std::vector<int>> label_sets(const ClusterAssignment& a) {
    if (const auto* h = std::get_if<HardAssignment>(&a)) {
        std::vector<std::vector<int>> out;
        for (int l : h->labels) out.push_back({l});
        return out;
    }
    return std::get<SoftAssignment>(a).labels;
}

}  // namespace scopefe
