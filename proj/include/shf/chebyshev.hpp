#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "errors.hpp"

namespace shf {

// f(x) = c0/2 + sum_k c_k T_k(y), y the affine image of x in [-1, 1].
class ChebSeries {
public:
    ChebSeries() = default;

    template <class F>
    static ChebSeries fit(F&& f, double a, double b, int degree) {
        ChebSeries s;
        s.a_ = a;
        s.b_ = b;
        const int n = degree;
        std::vector<double> fv(n + 1);
        for (int k = 0; k <= n; ++k) {
            double y = std::cos(std::numbers::pi * k / n);
            fv[k] = f(0.5 * (b - a) * y + 0.5 * (b + a));
        }
        s.c_.assign(n + 1, 0.0);
        for (int j = 0; j <= n; ++j) {
            double acc = 0.0;
            for (int k = 0; k <= n; ++k) {
                double w = (k == 0 || k == n) ? 0.5 : 1.0;
                acc += w * fv[k] * std::cos(std::numbers::pi * j * k / n);
            }
            s.c_[j] = 2.0 * acc / n;
        }
        s.c_[n] *= 0.5;
        return s;
    }

    double operator()(double x) const {
        double y = (2.0 * x - a_ - b_) / (b_ - a_);
        double b1 = 0.0, b2 = 0.0;
        for (int k = static_cast<int>(c_.size()) - 1; k >= 1; --k) {
            double t = 2.0 * y * b1 - b2 + c_[k];
            b2 = b1;
            b1 = t;
        }
        return y * b1 - b2 + 0.5 * c_[0];
    }

    // Antiderivative vanishing at a.
    ChebSeries integral() const {
        ChebSeries s;
        s.a_ = a_;
        s.b_ = b_;
        const int n = static_cast<int>(c_.size());
        s.c_.assign(n + 1, 0.0);
        const double h = 0.5 * (b_ - a_);
        for (int k = 1; k <= n; ++k) {
            double prev = c_[k - 1];
            double next = (k + 1 < n) ? c_[k + 1] : 0.0;
            s.c_[k] = h * (prev - next) / (2.0 * k);
        }
        s.c_[0] = 0.0;
        s.c_[0] = -2.0 * s(a_);
        return s;
    }

    double tail_magnitude() const {
        const std::size_t n = c_.size();
        double t = 0.0;
        for (std::size_t k = n >= 3 ? n - 3 : 0; k < n; ++k) t = std::max(t, std::abs(c_[k]));
        return t;
    }
    double scale() const {
        double m = 0.0;
        for (double v : c_) m = std::max(m, std::abs(v));
        return m;
    }
    double lo() const { return a_; }
    double hi() const { return b_; }

private:
    double a_ = -1.0, b_ = 1.0;
    std::vector<double> c_;
};

// Adaptive piecewise Chebyshev interpolant with a cumulative antiderivative.
class PiecewiseCheb {
public:
    PiecewiseCheb() = default;

    template <class F>
    PiecewiseCheb(F&& f, double a, double b, double tol, int degree = 24, int max_depth = 40) {
        build(f, a, b, tol, degree, max_depth);
        finish();
    }

    template <class F>
    PiecewiseCheb(F&& f, const std::vector<double>& breaks, double tol, int degree = 24, int max_depth = 40) {
        for (std::size_t i = 0; i + 1 < breaks.size(); ++i) build(f, breaks[i], breaks[i + 1], tol, degree, max_depth);
        finish();
    }

    bool empty() const { return pieces_.empty(); }
    double lo() const { return pieces_.front().lo(); }
    double hi() const { return pieces_.back().hi(); }
    std::size_t size() const { return pieces_.size(); }

    double operator()(double x) const { return pieces_[locate(x)](x); }

    // Integral from lo() to x.
    double cumulative(double x) const {
        std::size_t i = locate(x);
        return offset_[i] + anti_[i](x);
    }

private:
    template <class F>
    void build(F& f, double a, double b, double tol, int degree, int depth) {
        ChebSeries s = ChebSeries::fit(f, a, b, degree);
        if (s.tail_magnitude() <= tol * std::max(1.0, s.scale()) || depth == 0) {
            if (depth == 0 && s.tail_magnitude() > 1e3 * tol * std::max(1.0, s.scale()))
                throw NumericError("Chebyshev table did not resolve the function", s.tail_magnitude());
            pieces_.push_back(s);
            return;
        }
        double m = 0.5 * (a + b);
        build(f, a, m, tol, degree, depth - 1);
        build(f, m, b, tol, degree, depth - 1);
    }

    void finish() {
        double acc = 0.0;
        for (const auto& p : pieces_) {
            anti_.push_back(p.integral());
            offset_.push_back(acc);
            acc += anti_.back()(p.hi());
            starts_.push_back(p.lo());
        }
    }

    std::size_t locate(double x) const {
        auto it = std::upper_bound(starts_.begin(), starts_.end(), x);
        if (it == starts_.begin()) return 0;
        return static_cast<std::size_t>(it - starts_.begin()) - 1;
    }

    std::vector<ChebSeries> pieces_, anti_;
    std::vector<double> offset_, starts_;
};

}  // namespace shf
