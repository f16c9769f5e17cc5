#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace oracle {

Eig jacobi_eigen(const Matrix &A0, double tol, int max_sweeps) {
    const Eigen::Index n = A0.rows();
    Matrix A = 0.5 * (A0 + A0.transpose());
    Matrix V = Matrix::Identity(n, n);
    const double scale = std::max(1.0, A.norm());
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += A(p, q) * A(p, q);
        if (std::sqrt(off) <= tol * scale)
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (A(p, q) == 0.0)
                    continue;
                const double theta = (A(q, q) - A(p, p)) / (2.0 * A(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return A(a, a) < A(b, b); });
    Eig out{Vector(n), Matrix(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values(i) = A(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = V.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

Matrix psd_projection(const Matrix &G) {
    const auto e = jacobi_eigen(G);
    Matrix out = Matrix::Zero(G.rows(), G.cols());
    for (Eigen::Index i = 0; i < G.rows(); ++i)
        if (e.values(i) > 0)
            out += e.values(i) * e.vectors.col(i) * e.vectors.col(i).transpose();
    return 0.5 * (out + out.transpose());
}

double objective_nuclear(const Matrix &M, const Matrix &G, double tau) {
    const auto e = jacobi_eigen(M);
    return 0.5 * (M - G).squaredNorm() + tau * e.values.cwiseAbs().sum();
}

double objective_l1(const Matrix &M, const Matrix &G, double tau) {
    return 0.5 * (M - G).squaredNorm() + tau * M.cwiseAbs().sum();
}

Matrix prox_nuclear(const Matrix &G, double tau, int max_iter, double step) {
    // on the psd cone |M|_* = tr M, so the smooth part has gradient M - G + tau I
    const Eigen::Index n = G.rows();
    Matrix M = Matrix::Zero(n, n);
    const Matrix I = Matrix::Identity(n, n);
    const double scale = std::max(1.0, G.norm());
    for (int it = 0; it < max_iter; ++it) {
        Matrix next = psd_projection(M - step * (M - G + tau * I));
        const double change = (next - M).norm();
        M = std::move(next);
        if (change <= 1e-15 * scale)
            break;
    }
    return M;
}

namespace {
Matrix soft(const Matrix &A, double t) {
    return A.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
}
} // namespace

Matrix prox_l1(const Matrix &G, double tau, int max_iter) {
    const Eigen::Index n = G.rows();
    const double beta = 1.0;
    Matrix Z = psd_projection(G), U = Matrix::Zero(n, n), X = Z;
    const double scale = std::max(1.0, G.norm());
    for (int it = 0; it < max_iter; ++it) {
        X = soft((G + beta * (Z - U)) / (1.0 + beta), tau / (1.0 + beta));
        Matrix Zn = psd_projection(X + U);
        U += X - Zn;
        const double primal = (X - Zn).norm(), dual = (Zn - Z).norm();
        Z = std::move(Zn);
        if (primal <= 1e-14 * scale && dual <= 1e-14 * scale)
            break;
    }
    return Z;
}

ocelad::MetricState comid_minimizer(const ocelad::MetricState &s, const ocelad::Constraint &c,
                                    double eta, double rho) {
    const Vector u = c.x - c.z;
    const double d2 = u.dot(s.M * u);
    const double m = c.y * (s.mu - d2);
    Matrix gM = Matrix::Zero(s.M.rows(), s.M.cols());
    double gmu = 0.0;
    if (m < 1.0) {
        gM = c.y * u * u.transpose();
        gmu = -c.y;
    }
    ocelad::MetricState out;
    out.M = prox_nuclear(s.M - eta * gM, eta * rho);

    auto phi = [&](double mu) { return eta * gmu * mu + 0.5 * (mu - s.mu) * (mu - s.mu); };
    double a = 1.0, b = s.mu + std::abs(eta * gmu) + 1.0;
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = phi(x1), f2 = phi(x2);
    while (b - a > 1e-13) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = phi(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = phi(x2);
        }
    }
    out.mu = 0.5 * (a + b);
    return out;
}

ocelad::LossGradient hinge_fd(const ocelad::MetricState &s, const ocelad::Constraint &c, double h) {
    const Eigen::Index n = s.M.rows();
    ocelad::LossGradient g{Matrix::Zero(n, n), 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            auto plus = s, minus = s;
            plus.M(i, j) += h;
            minus.M(i, j) -= h;
            if (i != j) {
                plus.M(j, i) += h;
                minus.M(j, i) -= h;
            }
            const double d =
                (ocelad::hinge_loss(plus, c) - ocelad::hinge_loss(minus, c)) / (2.0 * h);
            if (i == j) {
                g.dM(i, i) = d;
            } else {
                g.dM(i, j) = d / 2.0;
                g.dM(j, i) = d / 2.0;
            }
        }
    }
    auto plus = s, minus = s;
    plus.mu += h;
    minus.mu -= h;
    g.dmu = (ocelad::hinge_loss(plus, c) - ocelad::hinge_loss(minus, c)) / (2.0 * h);
    return g;
}

double knn_error_bruteforce(const Matrix &M, const Matrix &points, const std::vector<int> &labels,
                            int k) {
    const auto n = points.rows();
    int wrong = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Eigen::Index>> d;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const Vector u = (points.row(i) - points.row(j)).transpose();
            d.emplace_back(u.dot(M * u), j);
        }
        std::sort(d.begin(), d.end());
        std::map<int, int> votes;
        for (int r = 0; r < k; ++r)
            ++votes[labels[static_cast<std::size_t>(d[static_cast<std::size_t>(r)].second)]];
        int best = -1, best_count = -1;
        for (const auto &[label, count] : votes)
            if (count > best_count) {
                best = label;
                best_count = count;
            }
        if (best != labels[static_cast<std::size_t>(i)])
            ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(n);
}

double nmi_reference(const std::vector<int> &a, const std::vector<int> &b) {
    const double n = static_cast<double>(a.size());
    std::map<int, double> ca, cb;
    std::map<std::pair<int, int>, double> cab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca[a[i]] += 1;
        cb[b[i]] += 1;
        cab[{a[i], b[i]}] += 1;
    }
    auto entropy = [n](const auto &counts) {
        double h = 0.0;
        for (const auto &[key, c] : counts)
            h -= c / n * std::log(c / n);
        return h;
    };
    const double ha = entropy(ca), hb = entropy(cb), hab = entropy(cab);
    if (ha <= 0.0 || hb <= 0.0)
        return 0.0;
    return (ha + hb - hab) / std::sqrt(ha * hb);
}

std::vector<ocelad::DyadicInterval> dyadic_bruteforce(std::int64_t t) {
    std::vector<ocelad::DyadicInterval> out;
    for (int j = 0; (std::int64_t{1} << j) <= t; ++j) {
        const std::int64_t len = std::int64_t{1} << j;
        for (std::int64_t start = len;; start += len) {
            if (start <= t && t < start + len) {
                out.push_back({j, start, start + len - 1});
                break;
            }
        }
    }
    return out;
}

Vector Gen::vector(Eigen::Index n, double scale) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v(i) = scale * normal();
    return v;
}

Matrix Gen::symmetric(Eigen::Index n, double scale) {
    Matrix A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            A(i, j) = scale * normal();
    return 0.5 * (A + A.transpose());
}

Matrix Gen::psd(Eigen::Index n, Eigen::Index rank, double scale) {
    if (rank < 0)
        rank = n;
    Matrix A(n, rank);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < rank; ++j)
            A(i, j) = normal();
    Matrix M = scale * A * A.transpose() / static_cast<double>(std::max<Eigen::Index>(rank, 1));
    return 0.5 * (M + M.transpose());
}

ocelad::MetricState Gen::state(Eigen::Index n) {
    ocelad::MetricState s;
    s.M = psd(n, integer(1, static_cast<int>(n)));
    s.mu = uniform(1.0, 4.0);
    return s;
}

ocelad::Constraint Gen::constraint(Eigen::Index n, double scale) {
    ocelad::Constraint c;
    c.x = vector(n, scale);
    c.z = vector(n, scale);
    c.y = uniform() < 0.5 ? 1 : -1;
    return c;
}

} // namespace oracle
