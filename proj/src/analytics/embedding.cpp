#include <cmath>
#include <map>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "dielink/analytics/analytics.hpp"

namespace dielink::analytics {

Eigen::MatrixXd dense_distances(const DistanceMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.coin_names.size());
    std::map<std::string, Eigen::Index> index;
    for (Eigen::Index i = 0; i < n; ++i) index[m.coin_names[i]] = i;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (const auto& s : m.scores) {
        const auto a = index.find(s.name1);
        const auto b = index.find(s.name2);
        if (a == index.end() || b == index.end())
            throw std::invalid_argument("distance matrix names an unknown coin");
        d(a->second, b->second) = s.distance;
        d(b->second, a->second) = s.distance;
    }
    return d;
}

MdsResult classical_mds(const Eigen::MatrixXd& distances) {
    const Eigen::Index n = distances.rows();
    if (n != distances.cols()) throw std::invalid_argument("classical_mds: matrix must be square");
    MdsResult out;
    out.coordinates = Eigen::MatrixX2d::Zero(n, 2);
    out.eigenvalues = Eigen::VectorXd::Zero(n);
    if (n <= 1) return out;

    // B = -1/2 J D^2 J
    const Eigen::MatrixXd sq = distances.array().square().matrix();
    const Eigen::VectorXd row_mean = sq.rowwise().mean();
    const Eigen::VectorXd col_mean = sq.colwise().mean().transpose();
    const double all_mean = sq.mean();
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) b(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + all_mean);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
    if (solver.info() != Eigen::Success) throw std::runtime_error("classical_mds: eigensolver failed");
    // Eigen sorts ascending; reverse to descending.
    out.eigenvalues = solver.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();

    double negative = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        if (out.eigenvalues(k) < 0.0) negative -= out.eigenvalues(k);
    out.clamp_residual_bound = 2.0 * negative;

    const double scale_floor = 1e-12 * std::max(1.0, std::abs(out.eigenvalues(0)));
    for (Eigen::Index axis = 0; axis < std::min<Eigen::Index>(2, n); ++axis) {
        const double lambda = out.eigenvalues(axis);
        if (lambda <= scale_floor) continue;
        Eigen::VectorXd v = vectors.col(axis);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v(i)) > 1e-12) {
                if (v(i) < 0.0) v = -v;
                break;
            }
        }
        out.coordinates.col(axis) = v * std::sqrt(lambda);
    }
    return out;
}

std::vector<EmbeddingPoint> embed_2d(const DistanceMatrix& m) {
    if (m.coin_names.empty()) throw std::invalid_argument("embed_2d: no coins");
    const MdsResult mds = classical_mds(dense_distances(m));
    std::vector<EmbeddingPoint> points;
    points.reserve(m.coin_names.size());
    for (std::size_t i = 0; i < m.coin_names.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        points.push_back({m.coin_names[i], mds.coordinates(r, 0), mds.coordinates(r, 1)});
    }
    return points;
}

}  // namespace dielink::analytics
