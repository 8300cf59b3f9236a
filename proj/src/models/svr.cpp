#include "qoe/models/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qoe {

namespace {

Eigen::MatrixXd rbf_kernel(const Eigen::Ref<const Eigen::MatrixXd>& a,
                           const Eigen::Ref<const Eigen::MatrixXd>& b,
                           double gamma) {
    const Eigen::VectorXd na = a.rowwise().squaredNorm();
    const Eigen::VectorXd nb = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * a * b.transpose());
    d2.colwise() += na;
    d2.rowwise() += nb.transpose();
    return (-gamma * d2.cwiseMax(0.0).array()).exp().matrix();
}

}  // namespace

SvrFitResult SvrRegressor::fit(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, double c, double epsilon,
    double gamma, double kkt_tol, std::uint64_t max_iter) {
    const Eigen::Index n = X.rows();
    if (n < 2) throw DataError("svr requires at least 2 samples");

    if (gamma <= 0.0) {
        const double mean = X.mean();
        const double var =
            (X.array() - mean).square().sum() / static_cast<double>(X.size());
        gamma = var > 0.0 ? 1.0 / (static_cast<double>(X.cols()) * var)
                          : 1.0 / static_cast<double>(X.cols());
    }

    const Eigen::MatrixXd kernel = rbf_kernel(X, X, gamma);

    // Expanded dual over z = [alpha; alpha*], sign u = +1 / -1 per block,
    // constraint sum(u .* z) = 0, box [0, C].
    const Eigen::Index m = 2 * n;
    Eigen::VectorXd z = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd grad(m);
    grad.head(n) = Eigen::VectorXd::Constant(n, epsilon) - y;
    grad.tail(n) = Eigen::VectorXd::Constant(n, epsilon) + y;

    auto sign_of = [n](Eigen::Index s) { return s < n ? 1.0 : -1.0; };
    auto point_of = [n](Eigen::Index s) { return s < n ? s : s - n; };

    SvrFitResult result;
    std::uint64_t iter = 0;
    for (; iter < max_iter; ++iter) {
        // Maximal violating pair.
        double up_best = -std::numeric_limits<double>::infinity();
        double low_best = std::numeric_limits<double>::infinity();
        Eigen::Index i = -1, j = -1;
        for (Eigen::Index s = 0; s < m; ++s) {
            const double u = sign_of(s);
            const double v = -u * grad[s];
            const bool in_up = (u > 0.0 && z[s] < c) || (u < 0.0 && z[s] > 0.0);
            const bool in_low = (u > 0.0 && z[s] > 0.0) || (u < 0.0 && z[s] < c);
            if (in_up && v > up_best) {
                up_best = v;
                i = s;
            }
            if (in_low && v < low_best) {
                low_best = v;
                j = s;
            }
        }
        if (i < 0 || j < 0 || up_best - low_best <= kkt_tol) {
            result.converged = true;
            break;
        }

        const double ui = sign_of(i), uj = sign_of(j);
        const Eigen::Index pi = point_of(i), pj = point_of(j);
        const double kii = kernel(pi, pi), kjj = kernel(pj, pj),
                     kij = kernel(pi, pj);
        const double old_i = z[i], old_j = z[j];

        if (ui != uj) {
            double quad = kii + kjj + 2.0 * kij;
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = z[i] - z[j];
            z[i] += delta;
            z[j] += delta;
            if (diff > 0.0) {
                if (z[j] < 0.0) {
                    z[j] = 0.0;
                    z[i] = diff;
                }
            } else {
                if (z[i] < 0.0) {
                    z[i] = 0.0;
                    z[j] = -diff;
                }
            }
            if (diff > 0.0) {
                if (z[i] > c) {
                    z[i] = c;
                    z[j] = c - diff;
                }
            } else {
                if (z[j] > c) {
                    z[j] = c;
                    z[i] = c + diff;
                }
            }
        } else {
            double quad = kii + kjj - 2.0 * kij;
            if (quad <= 0.0) quad = 1e-12;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = z[i] + z[j];
            z[i] -= delta;
            z[j] += delta;
            if (sum > c) {
                if (z[i] > c) {
                    z[i] = c;
                    z[j] = sum - c;
                }
            } else {
                if (z[j] < 0.0) {
                    z[j] = 0.0;
                    z[i] = sum;
                }
            }
            if (sum > c) {
                if (z[j] > c) {
                    z[j] = c;
                    z[i] = sum - c;
                }
            } else {
                if (z[i] < 0.0) {
                    z[i] = 0.0;
                    z[j] = sum;
                }
            }
        }

        const double dzi = z[i] - old_i;
        const double dzj = z[j] - old_j;
        if (dzi == 0.0 && dzj == 0.0) continue;
        for (Eigen::Index s = 0; s < m; ++s) {
            const double us = sign_of(s);
            const Eigen::Index ps = point_of(s);
            grad[s] += us * (ui * kernel(ps, pi) * dzi + uj * kernel(ps, pj) * dzj);
        }
    }
    result.iterations = iter;

    // Bias from the free points' gradients; bound points bracket it.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int nr_free = 0;
    for (Eigen::Index s = 0; s < m; ++s) {
        const double u = sign_of(s);
        const double ug = u * grad[s];
        if (z[s] >= c) {
            if (u < 0.0)
                ub = std::min(ub, ug);
            else
                lb = std::max(lb, ug);
        } else if (z[s] <= 0.0) {
            if (u > 0.0)
                ub = std::min(ub, ug);
            else
                lb = std::max(lb, ug);
        } else {
            ++nr_free;
            sum_free += ug;
        }
    }
    const double rho = nr_free > 0 ? sum_free / nr_free : 0.5 * (ub + lb);

    SvrRegressor& model = result.model;
    model.gamma_ = gamma;
    model.bias_ = -rho;
    result.beta = z.head(n) - z.tail(n);
    const Eigen::VectorXd& beta = result.beta;
    Eigen::Index support = 0;
    for (Eigen::Index s = 0; s < n; ++s)
        if (beta[s] != 0.0) ++support;
    model.support_x_.resize(support, X.cols());
    model.coefficients_.resize(support);
    Eigen::Index at = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (beta[s] != 0.0) {
            model.support_x_.row(at) = X.row(s);
            model.coefficients_[at] = beta[s];
            ++at;
        }
    }
    return result;
}

Eigen::VectorXd SvrRegressor::predict(
    const Eigen::Ref<const Eigen::MatrixXd>& X) const {
    if (support_x_.rows() == 0)
        return Eigen::VectorXd::Constant(X.rows(), bias_);
    const Eigen::MatrixXd k = rbf_kernel(X, support_x_, gamma_);
    return ((k * coefficients_).array() + bias_).matrix();
}

double SvrRegressor::kkt_residual(
    const Eigen::Ref<const Eigen::MatrixXd>& X,
    const Eigen::Ref<const Eigen::VectorXd>& y, double c, double epsilon,
    const Eigen::Ref<const Eigen::VectorXd>& beta) const {
    const Eigen::VectorXd err = predict(X) - y;
    double worst = 0.0;
    for (Eigen::Index s = 0; s < X.rows(); ++s) {
        const double b = beta[s];
        const double e = err[s];
        double r = 0.0;
        if (b >= c)
            r = std::max(0.0, e + epsilon);
        else if (b > 0.0)
            r = std::abs(e + epsilon);
        else if (b == 0.0)
            r = std::max(0.0, std::abs(e) - epsilon);
        else if (b > -c)
            r = std::abs(e - epsilon);
        else
            r = std::max(0.0, epsilon - e);
        worst = std::max(worst, r);
    }
    return worst;
}

void SvrRegressor::serialize(ByteWriter& w) const {
    w.f64(gamma_);
    w.f64(bias_);
    w.u64(static_cast<std::uint64_t>(support_x_.rows()));
    w.u64(static_cast<std::uint64_t>(support_x_.cols()));
    for (Eigen::Index r = 0; r < support_x_.rows(); ++r)
        for (Eigen::Index c = 0; c < support_x_.cols(); ++c)
            w.f64(support_x_(r, c));
    for (Eigen::Index i = 0; i < coefficients_.size(); ++i)
        w.f64(coefficients_[i]);
}

SvrRegressor SvrRegressor::deserialize(ByteReader& r) {
    SvrRegressor model;
    model.gamma_ = r.f64();
    model.bias_ = r.f64();
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    model.support_x_.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index c = 0; c < cols; ++c) model.support_x_(i, c) = r.f64();
    model.coefficients_.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) model.coefficients_[i] = r.f64();
    return model;
}

}  // namespace qoe
