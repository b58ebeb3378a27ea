#pragma once

// Galerkin truncation of the continuum phase-difference system about the
// 1-twisted state. A perturbation v(x) = sum_k c_k w_k(x) + d_k u_k(x) with
// w_k = 1 - cos(2 pi k x), u_k = sin(2 pi k x) vanishes at x = 0, which
// removes the phase-shift symmetry.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "model.hpp"
#include "ring.hpp"

namespace twistring {

class GalerkinModel {
public:
    GalerkinModel(const ModelParams& p, int modes, std::size_t grid = 0)
        : p_(p), m_(modes), ng_(grid ? grid : std::max<std::size_t>(256, 16 * static_cast<std::size_t>(modes))),
          ring_(ng_), cosk_(modes, static_cast<Eigen::Index>(ng_)), sink_(modes, static_cast<Eigen::Index>(ng_)),
          theta_(ng_), f_(ng_)
    {
        require_analysis_params(p, "GalerkinModel");
        if (modes < 1) throw NumericalError(Failure::InvalidArgument, "GalerkinModel: need at least one mode");
        for (int k = 1; k <= modes; ++k) {
            for (std::size_t j = 0; j < ng_; ++j) {
                const double a = two_pi * k * static_cast<double>(j) / static_cast<double>(ng_);
                cosk_(k - 1, static_cast<Eigen::Index>(j)) = std::cos(a);
                sink_(k - 1, static_cast<Eigen::Index>(j)) = std::sin(a);
            }
        }
    }

    int modes() const noexcept { return m_; }
    Eigen::Index dim() const noexcept { return 2 * m_; }

    /// Coordinates of d v/dt in the {w_k, u_k} basis: the w_k coordinate is
    /// minus the cosine coefficient, the u_k coordinate the sine coefficient.
    Eigen::VectorXd operator()(const Eigen::VectorXd& c)
    {
        for (std::size_t j = 0; j < ng_; ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            double v = 0.0;
            for (int k = 0; k < m_; ++k) v += c[k] * (1.0 - cosk_(k, jj)) + c[m_ + k] * sink_(k, jj);
            theta_[j] = two_pi * static_cast<double>(j) / static_cast<double>(ng_) + v;
        }
        ring_.rhs(theta_, p_, f_);
        Eigen::Map<const Eigen::VectorXd> f(f_.data(), static_cast<Eigen::Index>(ng_));
        const Eigen::VectorXd g = f.array() - f_[0];
        const double scale = 2.0 / static_cast<double>(ng_);
        Eigen::VectorXd out(2 * m_);
        out.head(m_) = -scale * (cosk_ * g);
        out.tail(m_) = scale * (sink_ * g);
        return out;
    }

private:
    ModelParams p_;
    int m_;
    std::size_t ng_;
    Ring ring_;
    Eigen::MatrixXd cosk_, sink_;
    std::vector<double> theta_, f_;
};

} // namespace twistring
