#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "errors.hpp"

namespace shf {

struct QuadratureConfig {
    double rel_tol = 1e-9;
    double abs_tol = 0.0;
    int max_subdivisions = 400;
    bool singularity_substitution = true;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol >= 0.0) || max_subdivisions < 1)
            throw DomainError("QuadratureConfig: need rel_tol > 0, abs_tol >= 0, max_subdivisions >= 1");
    }

    QuadratureConfig nested() const {
        QuadratureConfig q = *this;
        q.rel_tol = std::max(rel_tol, 1e-7);
        return q;
    }
    QuadratureConfig tightened(double factor) const {
        QuadratureConfig q = *this;
        q.rel_tol = std::max(rel_tol * factor, 1e-14);
        q.abs_tol = abs_tol * factor;
        return q;
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk21(F& f, double a, double b) {
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 0, 0.0, &err);
    err *= 0.5 * (b - a);
    if (!std::isfinite(v))
        throw NumericError("non-finite integrand on [" + std::to_string(a) + ", " + std::to_string(b) + "]", INFINITY);
    return {a, b, v, err};
}

}  // namespace detail

// Global adaptive Gauss-Kronrod (21 point) on a finite interval.
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadratureConfig& q) {
    q.validate();
    if (a == b) return {};
    if (a > b) {
        QuadResult r = integrate(f, b, a, q);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<detail::Panel> heap;
    std::vector<detail::Panel> frozen;
    detail::Panel first = detail::gk21(f, a, b);
    double total = first.value, err = first.error;
    heap.push(first);
    int splits = 0;
    auto target = [&] { return std::max(q.abs_tol, q.rel_tol * std::abs(total)); };
    while (err > target() && !heap.empty()) {
        if (splits >= q.max_subdivisions)
            throw NumericError("adaptive quadrature exceeded max_subdivisions", err);
        detail::Panel p = heap.top();
        heap.pop();
        double m = 0.5 * (p.a + p.b);
        if (!(m > p.a && m < p.b) || (p.b - p.a) < 1e-15 * std::max(std::abs(p.a), std::abs(p.b))) {
            frozen.push_back(p);
            continue;
        }
        detail::Panel l = detail::gk21(f, p.a, m), r = detail::gk21(f, m, p.b);
        total += l.value + r.value - p.value;
        err += l.error + r.error - p.error;
        heap.push(l);
        heap.push(r);
        ++splits;
    }
    // Recompute sums to shed accumulated cancellation.
    double v = 0.0, e = 0.0;
    for (const auto& p : frozen) { v += p.value; e += p.error; }
    while (!heap.empty()) { v += heap.top().value; e += heap.top().error; heap.pop(); }
    if (e > std::max(q.abs_tol, q.rel_tol * std::abs(v)) && e > 1e-12 * std::abs(v))
        throw NumericError("adaptive quadrature hit round-off before tolerance", e);
    return {v, e, splits};
}

// Sum of integrals over consecutive breakpoints.
template <class F>
QuadResult integrate_pieces(F&& f, const std::vector<double>& pts, const QuadratureConfig& q) {
    QuadResult out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] <= pts[i]) continue;
        QuadResult r = integrate(f, pts[i], pts[i + 1], q);
        out.value += r.value;
        out.error += r.error;
        out.subdivisions += r.subdivisions;
    }
    return out;
}

}  // namespace shf
