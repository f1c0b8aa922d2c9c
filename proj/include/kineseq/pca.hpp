#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "kineseq/classifier.hpp"
#include "kineseq/error.hpp"

namespace kineseq {

struct PcaPoint {
    double x = 0.0;
    double y = 0.0;
    std::string label;
};

namespace detail {

using Matrix = std::array<std::array<double, kEmbedDim>, kEmbedDim>;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Eigenvalues end
/// up on the diagonal of `a`, eigenvectors in the columns of `v`.
inline void jacobi_eigen(Matrix& a, Matrix& v) {
    for (std::size_t i = 0; i < kEmbedDim; ++i)
        for (std::size_t j = 0; j < kEmbedDim; ++j) v[i][j] = (i == j) ? 1.0 : 0.0;

    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < kEmbedDim; ++i) {
            diag += a[i][i] * a[i][i];
            for (std::size_t j = i + 1; j < kEmbedDim; ++j) off += a[i][j] * a[i][j];
        }
        if (off <= 1e-26 * (diag + 1e-300)) break;

        for (std::size_t p = 0; p < kEmbedDim; ++p) {
            for (std::size_t q = p + 1; q < kEmbedDim; ++q) {
                if (a[p][q] == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = std::copysign(1.0, theta) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                for (std::size_t i = 0; i < kEmbedDim; ++i) {
                    double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < kEmbedDim; ++i) {
                    double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < kEmbedDim; ++i) {
                    double vip = v[i][p], viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
}

}  // namespace detail

/// Projects the dataset's embedded vectors onto their top-2 principal
/// components. Diagnostic plot data only; classification never touches it.
///
/// Components are ordered by descending eigenvalue, and each component's
/// sign is fixed so that its largest-magnitude loading is positive.
inline std::vector<PcaPoint> pca_project(const EvaluationDataset& ds) {
    const std::size_t n = ds.samples.size();
    if (n < 3) throw EmptyDatasetError("pca_project: need at least 3 samples");

    std::vector<std::array<double, kEmbedDim>> rows(n);
    std::array<double, kEmbedDim> mean{};
    for (std::size_t r = 0; r < n; ++r) {
        rows[r] = embed(ds.samples[r].features, ds.position_scale);
        for (std::size_t c = 0; c < kEmbedDim; ++c) mean[c] += rows[r][c];
    }
    for (std::size_t c = 0; c < kEmbedDim; ++c) mean[c] /= static_cast<double>(n);
    for (auto& row : rows)
        for (std::size_t c = 0; c < kEmbedDim; ++c) row[c] -= mean[c];

    detail::Matrix cov{};
    for (std::size_t i = 0; i < kEmbedDim; ++i) {
        for (std::size_t j = i; j < kEmbedDim; ++j) {
            double sum = 0.0;
            for (std::size_t r = 0; r < n; ++r) sum += rows[r][i] * rows[r][j];
            cov[i][j] = cov[j][i] = sum / static_cast<double>(n - 1);
        }
    }

    detail::Matrix vectors{};
    detail::jacobi_eigen(cov, vectors);

    std::array<std::size_t, kEmbedDim> order{};
    for (std::size_t i = 0; i < kEmbedDim; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (cov[a][a] != cov[b][b]) return cov[a][a] > cov[b][b];
        return a < b;
    });

    std::array<std::array<double, kEmbedDim>, 2> pc{};
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < kEmbedDim; ++i) pc[c][i] = vectors[i][order[c]];
        std::size_t largest = 0;
        for (std::size_t i = 1; i < kEmbedDim; ++i)
            if (std::abs(pc[c][i]) > std::abs(pc[c][largest])) largest = i;
        if (pc[c][largest] < 0.0)
            for (auto& x : pc[c]) x = -x;
    }

    std::vector<PcaPoint> points(n);
    for (std::size_t r = 0; r < n; ++r) {
        double x = 0.0, y = 0.0;
        for (std::size_t c = 0; c < kEmbedDim; ++c) {
            x += rows[r][c] * pc[0][c];
            y += rows[r][c] * pc[1][c];
        }
        points[r] = {x, y, ds.samples[r].label};
    }
    return points;
}

/// Plot-data CSV with columns x, y, label.
inline void write_pca_csv(std::ostream& out, const std::vector<PcaPoint>& points) {
    out << "x,y,label\n";
    for (const auto& p : points)
        out << detail::format_double(p.x) << ',' << detail::format_double(p.y) << ',' << p.label
            << '\n';
}

}  // namespace kineseq
