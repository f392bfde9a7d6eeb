#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace srs {

struct QuadSpec {
    double rel_tol = 1e-8;
    double abs_tol = 1e-30; // absolute floor far below any physical density
    int max_subdivisions = 200;

    void validate() const
    {
        if (!(rel_tol > 0) || abs_tol < 0 || max_subdivisions < 1)
            throw std::invalid_argument("QuadSpec: invalid tolerances");
    }
};

template <typename T>
struct IntegralResult {
    T value{};
    double error = 0;      // absolute error estimate
    bool converged = true; // false if the panel budget ran out first
    long evaluations = 0;
};

namespace quad_detail {

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void legendre_rule(int n, std::vector<double>& x, std::vector<double>& w)
{
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::fabs(dz) < 1e-16)
                break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
}

struct Rule {
    std::vector<double> x, w;
};

inline const Rule& rule(int n)
{
    static thread_local std::vector<Rule> cache(130);
    Rule& r = cache.at(n);
    if (r.x.empty())
        legendre_rule(n, r.x, r.w);
    return r;
}

template <typename T, typename F>
T panel_gl(const F& f, double a, double b, int n, long& evals)
{
    const Rule& r = rule(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    T acc{};
    for (int i = 0; i < n; ++i)
        acc += T(r.w[i] * h) * T(f(c + h * r.x[i]));
    evals += n;
    return acc;
}

inline double tmag(double v) { return std::fabs(v); }
inline double tmag(std::complex<double> v) { return std::abs(v); }

} // namespace quad_detail

/// Adaptive panel-bisection quadrature with an embedded GL15/GL31 error
/// estimate. Splits the worst panel first; stops when the summed error meets
/// max(abs_tol, rel_tol*|I|) or the subdivision budget is exhausted (flagged).
template <typename T, typename F>
IntegralResult<T> integrate_1d(const F& f, double a, double b, const QuadSpec& spec = {})
{
    spec.validate();
    if (!(a < b))
        throw std::invalid_argument("integrate_1d: requires a < b");

    struct Panel {
        double a, b, err;
        T fine;
        bool operator<(const Panel& o) const { return err < o.err; }
    };

    IntegralResult<T> res;
    auto make_panel = [&](double lo, double hi) {
        Panel p;
        p.a = lo;
        p.b = hi;
        const T coarse = quad_detail::panel_gl<T>(f, lo, hi, 15, res.evaluations);
        p.fine = quad_detail::panel_gl<T>(f, lo, hi, 31, res.evaluations);
        p.err = quad_detail::tmag(p.fine - coarse);
        return p;
    };

    std::priority_queue<Panel> heap;
    heap.push(make_panel(a, b));
    T total = heap.top().fine;
    double toterr = heap.top().err;

    int used = 1;
    while (used < spec.max_subdivisions) {
        const double goal = std::max(spec.abs_tol, spec.rel_tol * quad_detail::tmag(total));
        if (toterr <= goal)
            break;
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        Panel l = make_panel(worst.a, mid);
        Panel r = make_panel(mid, worst.b);
        total += l.fine + r.fine - worst.fine;
        toterr += l.err + r.err - worst.err;
        heap.push(l);
        heap.push(r);
        ++used;
    }
    res.value = total;
    res.error = toterr;
    res.converged = toterr <= std::max(spec.abs_tol, spec.rel_tol * quad_detail::tmag(total));
    return res;
}

template <typename F>
IntegralResult<double> integrate_1d_real(const F& f, double a, double b, const QuadSpec& spec = {})
{
    return integrate_1d<double>(f, a, b, spec);
}

template <typename F>
IntegralResult<std::complex<double>> integrate_1d_complex(const F& f, double a, double b,
                                                          const QuadSpec& spec = {})
{
    return integrate_1d<std::complex<double>>(f, a, b, spec);
}

/// Fixed composite Gauss-Legendre plan over explicit panel edges. Node
/// positions are reusable, which lets callers precompute expensive integrand
/// factors once and sweep the cheap ones (Hankel transforms do exactly this).
struct CompositePlan {
    std::vector<double> x; // nodes
    std::vector<double> w; // weights (interval measure included)

    static CompositePlan build(const std::vector<double>& edges, int nodes_per_panel)
    {
        if (edges.size() < 2)
            throw std::invalid_argument("CompositePlan: need at least one panel");
        const quad_detail::Rule& r = quad_detail::rule(nodes_per_panel);
        CompositePlan plan;
        plan.x.reserve((edges.size() - 1) * nodes_per_panel);
        plan.w.reserve((edges.size() - 1) * nodes_per_panel);
        for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
            const double c = 0.5 * (edges[p] + edges[p + 1]);
            const double h = 0.5 * (edges[p + 1] - edges[p]);
            if (!(h > 0))
                throw std::invalid_argument("CompositePlan: edges must increase");
            for (int i = 0; i < nodes_per_panel; ++i) {
                plan.x.push_back(c + h * r.x[i]);
                plan.w.push_back(h * r.w[i]);
            }
        }
        return plan;
    }
};

/// Panel edges from `lo` to `hi` honoring local resolution scales: each panel
/// is no wider than `max_width` evaluated at its left edge.
inline std::vector<double> graded_edges(double lo, double hi,
                                        const std::function<double(double)>& max_width,
                                        std::size_t max_panels = 200000)
{
    if (!(hi > lo))
        throw std::invalid_argument("graded_edges: requires hi > lo");
    std::vector<double> edges{lo};
    while (edges.back() < hi) {
        const double wmax = std::max(max_width(edges.back()), (hi - lo) * 1e-9);
        double next = edges.back() + wmax;
        if (next > hi - (hi - lo) * 1e-12)
            next = hi;
        edges.push_back(next);
        if (edges.size() > max_panels)
            throw std::runtime_error("graded_edges: panel budget exceeded");
    }
    return edges;
}

} // namespace srs
