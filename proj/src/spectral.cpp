#include "vsl/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <mutex>
#include <numbers>

#include "vsl/error.hpp"

namespace vsl {

namespace {

// FFTW's planner is not re-entrant; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// FFTW_ESTIMATE keeps plan selection (and therefore results) bitwise reproducible.
class FftPlan {
public:
    explicit FftPlan(int n) : n_(n) {
        const std::size_t real_size = static_cast<std::size_t>(n) * n;
        const std::size_t cplx_size = static_cast<std::size_t>(n) * (n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        real_ = fftw_alloc_real(real_size);
        cplx_ = fftw_alloc_complex(cplx_size);
        fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, cplx_, FFTW_ESTIMATE);
        inv_ = fftw_plan_dft_c2r_2d(n, n, cplx_, real_, FFTW_ESTIMATE);
    }
    ~FftPlan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(inv_);
        fftw_free(real_);
        fftw_free(cplx_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    void forward(std::span<const double> in, std::span<Complex> out) {
        std::memcpy(real_, in.data(), in.size_bytes());
        fftw_execute(fwd_);
        std::memcpy(static_cast<void*>(out.data()), cplx_, out.size_bytes());
    }
    // c2r destroys its input, so it always runs on the plan-owned buffer.
    void inverse(std::span<const Complex> in, std::span<double> out) {
        std::memcpy(cplx_, in.data(), in.size_bytes());
        fftw_execute(inv_);
        const double scale = 1.0 / (static_cast<double>(n_) * n_);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
    }

private:
    int n_;
    double* real_ = nullptr;
    fftw_complex* cplx_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan inv_ = nullptr;
};

FftPlan& plan_for(int n) {
    thread_local std::map<int, std::unique_ptr<FftPlan>> cache;
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<FftPlan>(n);
    return *slot;
}

void require_finite(std::span<const double> values, const char* what) {
    if (!all_finite(values)) throw Error(ErrorKind::NonFinite, what);
}

}  // namespace

TorusGrid::TorusGrid(double half_period, int resolution) : half_period_(half_period), n_(resolution) {
    if (!(half_period > 0.0) || !std::isfinite(half_period))
        throw Error(ErrorKind::InvalidGrid, "half period must be positive");
    if (resolution < 16 || resolution % 2 != 0)
        throw Error(ErrorKind::InvalidGrid, "resolution must be even and >= 16");
}

double TorusGrid::wavenumber(int signed_k) const noexcept {
    return signed_k * std::numbers::pi / half_period_;
}

Point2 TorusGrid::reduce(Point2 p) const noexcept {
    const double period = 2.0 * half_period_;
    for (double& x : p) {
        x = std::fmod(x + half_period_, period);
        if (x < 0.0) x += period;
        x -= half_period_;
        if (x >= half_period_) x -= period;
    }
    return p;
}

const char* to_string(Interp scheme) {
    return scheme == Interp::Trigonometric ? "trigonometric" : "bicubic";
}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
        throw Error(ErrorKind::InvalidGrid, "value count does not match the grid");
}

ScalarField ScalarField::zeros(TorusGrid grid) {
    return ScalarField(grid, std::vector<double>(grid.size(), 0.0));
}

ScalarField ScalarField::from_function(TorusGrid grid, const std::function<double(double, double)>& f) {
    std::vector<double> v(grid.size());
    const int n = grid.N();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v[static_cast<std::size_t>(i) * n + j] = f(grid.coord(i), grid.coord(j));
    return ScalarField(grid, std::move(v));
}

ScalarField ScalarField::from_spectrum(Spectrum spectrum) {
    auto values = inverse(spectrum);
    ScalarField out(spectrum.grid, std::move(values));
    out.spectrum_ = std::make_shared<const Spectrum>(std::move(spectrum));
    return out;
}

std::shared_ptr<const Spectrum> ScalarField::spectrum() const {
    if (spectrum_) return spectrum_;
    return std::make_shared<const Spectrum>(forward(grid_, values_));
}

Spectrum forward(const TorusGrid& grid, std::span<const double> values) {
    Spectrum out(grid);
    plan_for(grid.N()).forward(values, out.coeffs);
    return out;
}

std::vector<double> inverse(const Spectrum& spectrum) {
    std::vector<double> out(spectrum.grid.size());
    plan_for(spectrum.grid.N()).inverse(spectrum.coeffs, out);
    return out;
}

Spectrum derivative(const Spectrum& f, int order1, int order2) {
    const TorusGrid& g = f.grid;
    const int n = g.N();
    const int cols = g.spectral_cols();
    Spectrum out(g);
    auto factor = [](double k, int order) {
        Complex c{1.0, 0.0};
        for (int o = 0; o < order; ++o) c *= Complex{0.0, k};
        return c;
    };
    for (int k1 = 0; k1 < n; ++k1) {
        const bool nyq1 = (k1 == n / 2) && (order1 % 2 == 1);
        const Complex f1 = factor(g.wavenumber(g.signed_index(k1)), order1);
        for (int k2 = 0; k2 < cols; ++k2) {
            const bool nyq2 = (k2 == n / 2) && (order2 % 2 == 1);
            if (nyq1 || nyq2) continue;
            out.at(k1, k2) = f.at(k1, k2) * f1 * factor(g.wavenumber(k2), order2);
        }
    }
    return out;
}

Spectrum inverse_laplacian(const Spectrum& f) {
    const TorusGrid& g = f.grid;
    Spectrum out(g);
    for (int k1 = 0; k1 < g.N(); ++k1) {
        const double a = g.wavenumber(g.signed_index(k1));
        for (int k2 = 0; k2 < g.spectral_cols(); ++k2) {
            if (k1 == 0 && k2 == 0) continue;
            const double b = g.wavenumber(k2);
            out.at(k1, k2) = -f.at(k1, k2) / (a * a + b * b);
        }
    }
    return out;
}

bool inside_dealias_band(const TorusGrid& grid, int k1, int k2) {
    const double m1 = grid.signed_index(k1);
    const double m2 = k2;
    const double cutoff = grid.N() / 3.0;
    return m1 * m1 + m2 * m2 <= cutoff * cutoff;
}

void dealias_in_place(Spectrum& f) {
    const TorusGrid& g = f.grid;
    for (int k1 = 0; k1 < g.N(); ++k1)
        for (int k2 = 0; k2 < g.spectral_cols(); ++k2)
            if (!inside_dealias_band(g, k1, k2)) f.at(k1, k2) = Complex{};
}

Spectrum dealias(Spectrum f) {
    dealias_in_place(f);
    return f;
}

std::array<Spectrum, 2> velocity_spectra(const Spectrum& omega) {
    const Spectrum psi = inverse_laplacian(omega);
    Spectrum u1 = derivative(psi, 0, 1);
    for (auto& c : u1.coeffs) c = -c;
    return {std::move(u1), derivative(psi, 1, 0)};
}

std::array<Spectrum, 3> velocity_gradient_spectra(const Spectrum& omega) {
    const Spectrum psi = inverse_laplacian(omega);
    Spectrum d1u1 = derivative(psi, 1, 1);
    for (auto& c : d1u1.coeffs) c = -c;
    Spectrum d2u1 = derivative(psi, 0, 2);
    for (auto& c : d2u1.coeffs) c = -c;
    return {std::move(d1u1), std::move(d2u1), derivative(psi, 2, 0)};
}

VectorField velocity_from_vorticity(const ScalarField& omega) {
    require_finite(omega.values(), "vorticity contains non-finite samples");
    auto spec = *omega.spectrum();
    const double n2 = static_cast<double>(omega.grid().size());
    const double avg = spec.at(0, 0).real() / n2;
    const double scale = max_abs(omega.values());
    if (std::abs(avg) > 1e-10 * scale)
        throw Error(ErrorKind::NonZeroMean, "vorticity mean " + std::to_string(avg) + " exceeds tolerance");
    spec.at(0, 0) = Complex{};
    auto [u1, u2] = velocity_spectra(spec);
    return {ScalarField::from_spectrum(std::move(u1)), ScalarField::from_spectrum(std::move(u2))};
}

VectorField gradient(const ScalarField& f) {
    require_finite(f.values(), "field contains non-finite samples");
    auto spec = f.spectrum();
    return {ScalarField::from_spectrum(derivative(*spec, 1, 0)),
            ScalarField::from_spectrum(derivative(*spec, 0, 1))};
}

ScalarField divergence(const VectorField& u) {
    Spectrum d = derivative(*u.u1.spectrum(), 1, 0);
    const Spectrum d2 = derivative(*u.u2.spectrum(), 0, 1);
    for (std::size_t i = 0; i < d.coeffs.size(); ++i) d.coeffs[i] += d2.coeffs[i];
    return ScalarField::from_spectrum(std::move(d));
}

ScalarField curl(const VectorField& u) {
    Spectrum c = derivative(*u.u2.spectrum(), 1, 0);
    const Spectrum d = derivative(*u.u1.spectrum(), 0, 1);
    for (std::size_t i = 0; i < c.coeffs.size(); ++i) c.coeffs[i] -= d.coeffs[i];
    return ScalarField::from_spectrum(std::move(c));
}

double sample_trig(const Spectrum& f, Point2 p) {
    const TorusGrid& g = f.grid;
    const int n = g.N();
    const int cols = g.spectral_cols();
    p = g.reduce(p);
    const double s1 = std::numbers::pi / g.L() * (p[0] + g.L());
    const double s2 = std::numbers::pi / g.L() * (p[1] + g.L());

    // The Nyquist mode is represented by its cosine so the interpolant stays real.
    std::vector<Complex> e1(n);
    for (int k1 = 0; k1 < n; ++k1) {
        const int m = g.signed_index(k1);
        e1[k1] = (k1 == n / 2) ? Complex{std::cos(m * s1), 0.0} : std::polar(1.0, m * s1);
    }
    std::vector<Complex> row(cols);
    for (int k1 = 0; k1 < n; ++k1) {
        const Complex* c = &f.at(k1, 0);
        const Complex e = e1[k1];
        for (int k2 = 0; k2 < cols; ++k2) row[k2] += c[k2] * e;
    }
    double acc = 0.0;
    for (int k2 = 0; k2 < cols; ++k2) {
        const bool edge = (k2 == 0) || (k2 == n / 2);
        const Complex e2 = (k2 == n / 2) ? Complex{std::cos(k2 * s2), 0.0} : std::polar(1.0, k2 * s2);
        acc += (edge ? 1.0 : 2.0) * (row[k2] * e2).real();
    }
    return acc / (static_cast<double>(n) * n);
}

double sample_bicubic(const TorusGrid& grid, std::span<const double> values, Point2 p) {
    const int n = grid.N();
    p = grid.reduce(p);
    const double s1 = (p[0] + grid.L()) / grid.h();
    const double s2 = (p[1] + grid.L()) / grid.h();
    const int i0 = static_cast<int>(std::floor(s1));
    const int j0 = static_cast<int>(std::floor(s2));
    auto weights = [](double t) {
        return std::array<double, 4>{-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                                     -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
    };
    const auto w1 = weights(s1 - i0);
    const auto w2 = weights(s2 - j0);
    double acc = 0.0;
    for (int a = 0; a < 4; ++a) {
        const int i = ((i0 - 1 + a) % n + n) % n;
        double racc = 0.0;
        for (int b = 0; b < 4; ++b) {
            const int j = ((j0 - 1 + b) % n + n) % n;
            racc += w2[b] * values[static_cast<std::size_t>(i) * n + j];
        }
        acc += w1[a] * racc;
    }
    return acc;
}

double sample_at(const ScalarField& f, Point2 p, Interp scheme) {
    require_finite(f.values(), "field contains non-finite samples");
    if (scheme == Interp::Bicubic) return sample_bicubic(f.grid(), f.values(), p);
    return sample_trig(*f.spectrum(), p);
}

double lp_norm(const TorusGrid& grid, std::span<const double> values, Norm p) {
    switch (p) {
        case Norm::Linf:
            return max_abs(values);
        case Norm::L1: {
            double s = 0.0;
            for (double v : values) s += std::abs(v);
            return s * grid.cell_area();
        }
        case Norm::L2: {
            double s = 0.0;
            for (double v : values) s += v * v;
            return std::sqrt(s * grid.cell_area());
        }
    }
    return 0.0;
}

double lp_norm(const ScalarField& f, Norm p) { return lp_norm(f.grid(), f.values(), p); }

double l2_squared(const Spectrum& f) {
    const TorusGrid& g = f.grid;
    const int n = g.N();
    double s = 0.0;
    for (int k1 = 0; k1 < n; ++k1)
        for (int k2 = 0; k2 < g.spectral_cols(); ++k2) {
            const double w = (k2 == 0 || k2 == n / 2) ? 1.0 : 2.0;
            s += w * std::norm(f.at(k1, k2));
        }
    const double n2 = static_cast<double>(n) * n;
    return s * g.cell_area() / n2;
}

double gradient_l2_squared(const Spectrum& f) {
    const TorusGrid& g = f.grid;
    const int n = g.N();
    double s = 0.0;
    for (int k1 = 0; k1 < n; ++k1) {
        const double a = g.wavenumber(g.signed_index(k1));
        for (int k2 = 0; k2 < g.spectral_cols(); ++k2) {
            const double b = g.wavenumber(k2);
            const double w = (k2 == 0 || k2 == n / 2) ? 1.0 : 2.0;
            s += w * (a * a + b * b) * std::norm(f.at(k1, k2));
        }
    }
    const double n2 = static_cast<double>(n) * n;
    return s * g.cell_area() / n2;
}

double mean(const ScalarField& f) {
    double s = 0.0;
    for (double v : f.values()) s += v;
    return s / static_cast<double>(f.values().size());
}

double max_abs(std::span<const double> values) {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(std::span<const double> values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace vsl
