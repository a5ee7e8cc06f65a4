#pragma once

// Anisotropic surface integrands F(x, pi). Unoriented planes are encoded by a
// unit normal taken up to sign, so every evaluator is even in the normal.

#include "errors.hpp"
#include "types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace kplab {

enum class IntegrandKind { constant, matrix_norm, table };

inline const char *to_string(IntegrandKind k) {
    switch (k) {
        case IntegrandKind::constant: return "constant";
        case IntegrandKind::matrix_norm: return "matrix";
        case IntegrandKind::table: return "table";
    }
    return "unknown";
}

template <typename Scalar>
class AnisotropicIntegrand {
public:
    using Vec = Vec3<Scalar>;
    using Mat = Mat3<Scalar>;
    using MatrixField = std::function<Mat(const Vec &)>;

    static AnisotropicIntegrand constant(Scalar value) {
        if (!(value > 0)) throw Error(ErrorCode::InvalidArgument, "constant integrand must be positive");
        AnisotropicIntegrand f;
        f.m_impl = Constant{value};
        f.m_lower = f.m_upper = value;
        return f;
    }

    // F(nu) = sqrt(nu^T M nu) with M symmetric positive definite.
    static AnisotropicIntegrand matrix_norm(const Mat &M) {
        if (!M.isApprox(M.transpose())) throw Error(ErrorCode::InvalidArgument, "integrand matrix must be symmetric");
        Eigen::SelfAdjointEigenSolver<Mat> es(M);
        if (!(es.eigenvalues().minCoeff() > 0))
            throw Error(ErrorCode::InvalidArgument, "integrand matrix must be positive definite");
        AnisotropicIntegrand f;
        f.m_impl = Matrix{[M](const Vec &) { return M; }, false};
        f.m_lower = std::sqrt(es.eigenvalues().minCoeff());
        f.m_upper = std::sqrt(es.eigenvalues().maxCoeff());
        return f;
    }

    // Position-dependent M(x); the caller supplies the bounds lambda <= F <= Lambda.
    static AnisotropicIntegrand matrix_field(MatrixField M, Scalar lambda, Scalar Lambda) {
        if (!(lambda > 0) || !(Lambda >= lambda)) throw Error(ErrorCode::InvalidArgument, "need 0 < lambda <= Lambda");
        AnisotropicIntegrand f;
        f.m_impl = Matrix{std::move(M), true};
        f.m_lower = lambda;
        f.m_upper = Lambda;
        return f;
    }

    // Values on a (polar, azimuth) grid over the upper hemisphere: polar angle
    // i * (pi/2) / (n_polar - 1), azimuth j * 2 pi / n_azimuth; row-major in i.
    // The pole row is averaged and the equator row symmetrized so that the even
    // extension is continuous.
    static AnisotropicIntegrand table(int n_polar, int n_azimuth, std::vector<Scalar> values) {
        if (n_polar < 2 || n_azimuth < 2 || n_azimuth % 2 != 0 ||
            values.size() != std::size_t(n_polar) * std::size_t(n_azimuth))
            throw Error(ErrorCode::InvalidArgument, "table integrand shape mismatch");
        for (Scalar v : values)
            if (!(v > 0)) throw Error(ErrorCode::InvalidArgument, "table integrand values must be positive");
        const std::size_t eq = std::size_t(n_polar - 1) * std::size_t(n_azimuth);
        for (int j = 0; j < n_azimuth / 2; ++j) {
            const std::size_t a = eq + std::size_t(j), b = eq + std::size_t(j + n_azimuth / 2);
            values[a] = values[b] = (values[a] + values[b]) / 2;
        }
        Scalar pole = 0;
        for (int j = 0; j < n_azimuth; ++j) pole += values[std::size_t(j)];
        for (int j = 0; j < n_azimuth; ++j) values[std::size_t(j)] = pole / Scalar(n_azimuth);
        AnisotropicIntegrand f;
        f.m_lower = *std::min_element(values.begin(), values.end());
        f.m_upper = *std::max_element(values.begin(), values.end());
        f.m_impl = Table{n_polar, n_azimuth, std::move(values)};
        return f;
    }

    IntegrandKind kind() const {
        if (std::holds_alternative<Constant>(m_impl)) return IntegrandKind::constant;
        if (std::holds_alternative<Matrix>(m_impl)) return IntegrandKind::matrix_norm;
        return IntegrandKind::table;
    }

    Scalar lower_bound() const { return m_lower; }
    Scalar upper_bound() const { return m_upper; }

    // Built-in constant and matrix kinds are elliptic by construction; tables are not checked.
    bool ellipticity_verified() const { return kind() != IntegrandKind::table; }

    Scalar operator()(const Vec &x, const Vec &normal) const {
        return std::visit([&](const auto &impl) { return impl.value(x, normal); }, m_impl);
    }

    // Gradient in a of the 1-homogeneous extension |a| F(x, a / |a|).
    Vec homogeneous_gradient(const Vec &x, const Vec &a) const {
        const Scalar len = a.norm();
        if (len == 0) return Vec::Zero();
        const Vec nu = a / len;
        if (auto c = std::get_if<Constant>(&m_impl)) return c->value_ * nu;
        if (auto m = std::get_if<Matrix>(&m_impl)) {
            const Mat M = m->field(x);
            return M * nu / std::sqrt(nu.dot(M * nu));
        }
        // tangential derivative by central differences on the sphere
        const Scalar delta = Scalar(1e-6);
        Vec u1 = nu.unitOrthogonal();
        Vec u2 = nu.cross(u1);
        const Scalar F0 = (*this)(x, nu);
        Vec g = F0 * nu;
        for (const Vec &u : {u1, u2}) {
            const Scalar fp = (*this)(x, (nu + delta * u).normalized());
            const Scalar fm = (*this)(x, (nu - delta * u).normalized());
            g += (fp - fm) / (2 * delta) * u;
        }
        return g;
    }

    bool depends_on_position() const {
        if (auto m = std::get_if<Matrix>(&m_impl)) return m->position_dependent;
        return false;
    }

    Vec position_gradient(const Vec &x, const Vec &normal) const {
        if (!depends_on_position()) return Vec::Zero();
        const Scalar delta = Scalar(1e-6) * std::max(Scalar(1), x.norm());
        Vec g;
        for (int i = 0; i < 3; ++i) {
            Vec e = Vec::Zero();
            e[i] = delta;
            g[i] = ((*this)(x + e, normal) - (*this)(x - e, normal)) / (2 * delta);
        }
        return g;
    }

    // Checks lambda <= F <= Lambda and evenness on a fixed probe set.
    bool spot_check(const std::vector<Vec> &points = {Vec::Zero()}) const {
        static const Scalar probes[][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1},
                                           {1, 1, 1}, {1, -2, 3}, {-3, 1, 2}, {2, 3, -1}, {0.3, -0.7, 0.2}};
        for (const Vec &x : points)
            for (const auto &p : probes) {
                const Vec nu = Vec(p[0], p[1], p[2]).normalized();
                const Scalar a = (*this)(x, nu), b = (*this)(x, Vec(-nu));
                if (a != b) return false;
                const Scalar slack = Scalar(1e-12) * m_upper;
                if (a < m_lower - slack || a > m_upper + slack) return false;
            }
        return true;
    }

    // Parameters for serialization.
    Scalar constant_value() const { return std::get<Constant>(m_impl).value_; }
    Mat matrix_at(const Vec &x) const { return std::get<Matrix>(m_impl).field(x); }
    const std::vector<Scalar> &table_values() const { return std::get<Table>(m_impl).values; }
    int table_polar() const { return std::get<Table>(m_impl).n_polar; }
    int table_azimuth() const { return std::get<Table>(m_impl).n_azimuth; }

private:
    struct Constant {
        Scalar value_;
        Scalar value(const Vec &, const Vec &) const { return value_; }
    };
    struct Matrix {
        MatrixField field;
        bool position_dependent;
        Scalar value(const Vec &x, const Vec &nu) const { return std::sqrt(nu.dot(field(x) * nu)); }
    };
    struct Table {
        int n_polar, n_azimuth;
        std::vector<Scalar> values;

        Scalar at(int i, int j) const {
            j = ((j % n_azimuth) + n_azimuth) % n_azimuth;
            return values[std::size_t(i) * std::size_t(n_azimuth) + std::size_t(j)];
        }

        Scalar value(const Vec &, const Vec &normal) const {
            Vec nu = normal;
            // canonical representative of +-nu
            if (nu.z() < 0 || (nu.z() == 0 && (nu.y() < 0 || (nu.y() == 0 && nu.x() < 0)))) nu = -nu;
            const Scalar polar = std::acos(std::clamp(nu.z() / nu.norm(), Scalar(-1), Scalar(1)));
            Scalar az = std::atan2(nu.y(), nu.x());
            if (az < 0) az += two_pi<Scalar>;
            const Scalar u = polar / (pi<Scalar> / 2) * Scalar(n_polar - 1);
            const Scalar v = az / two_pi<Scalar> * Scalar(n_azimuth);
            const int i = std::min(int(std::floor(u)), n_polar - 2);
            const int j = int(std::floor(v));
            const Scalar fu = u - Scalar(i), fv = v - Scalar(j);
            return (1 - fu) * ((1 - fv) * at(i, j) + fv * at(i, j + 1)) +
                   fu * ((1 - fv) * at(i + 1, j) + fv * at(i + 1, j + 1));
        }
    };

    std::variant<Constant, Matrix, Table> m_impl = Constant{1};
    Scalar m_lower = 1, m_upper = 1;
};

} // namespace kplab
