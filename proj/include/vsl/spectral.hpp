#pragma once

// Periodic pseudo-spectral machinery on the torus [-L, L)^2.
//
// Layout conventions (fixed; stored spectra depend on them):
//   * node (i, j) sits at x1 = -L + 2L*i/N, x2 = -L + 2L*j/N, stored row-major
//     at values[i*N + j] (row index <-> x1).
//   * spectra use the real-to-complex half layout: coeffs[k1*(N/2+1) + k2] with
//     k1 in [0, N) (signed index k1 - N above N/2) and k2 in [0, N/2].
//   * forward transform is unnormalized, inverse carries the 1/N^2 factor.
//   * physical wavenumber of signed index m is m*pi/L.

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace vsl {

using Complex = std::complex<double>;
using Point2 = std::array<double, 2>;

class TorusGrid {
public:
    TorusGrid(double half_period, int resolution);

    double L() const noexcept { return half_period_; }
    int N() const noexcept { return n_; }
    double h() const noexcept { return 2.0 * half_period_ / n_; }
    double cell_area() const noexcept { return h() * h(); }
    double coord(int index) const noexcept { return -half_period_ + h() * index; }
    int spectral_cols() const noexcept { return n_ / 2 + 1; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_) * n_; }
    std::size_t spectral_size() const noexcept {
        return static_cast<std::size_t>(n_) * spectral_cols();
    }
    /// Signed integer wavenumber of a row index of the spectral array.
    int signed_index(int k1) const noexcept { return k1 <= n_ / 2 ? k1 : k1 - n_; }
    double wavenumber(int signed_k) const noexcept;

    /// Reduce a point into the fundamental domain [-L, L)^2.
    Point2 reduce(Point2 p) const noexcept;
    /// Index of the node at -x (mod N) for a node index.
    int mirror(int index) const noexcept { return (n_ - index) % n_; }

    bool operator==(const TorusGrid& other) const noexcept = default;

private:
    double half_period_;
    int n_;
};

struct Spectrum {
    TorusGrid grid;
    std::vector<Complex> coeffs;

    explicit Spectrum(TorusGrid g) : grid(g), coeffs(g.spectral_size()) {}
    Complex& at(int k1, int k2) { return coeffs[static_cast<std::size_t>(k1) * grid.spectral_cols() + k2]; }
    const Complex& at(int k1, int k2) const {
        return coeffs[static_cast<std::size_t>(k1) * grid.spectral_cols() + k2];
    }
};

class ScalarField {
public:
    ScalarField(TorusGrid grid, std::vector<double> values);

    static ScalarField zeros(TorusGrid grid);
    static ScalarField from_function(TorusGrid grid, const std::function<double(double, double)>& f);
    /// Inverse-transforms and keeps the spectrum as the cache.
    static ScalarField from_spectrum(Spectrum spectrum);

    const TorusGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator()(int i, int j) const noexcept {
        return values_[static_cast<std::size_t>(i) * grid_.N() + j];
    }
    bool has_spectrum_cache() const noexcept { return static_cast<bool>(spectrum_); }
    /// Cached spectrum when present, otherwise a fresh forward transform.
    std::shared_ptr<const Spectrum> spectrum() const;

private:
    TorusGrid grid_;
    std::vector<double> values_;
    std::shared_ptr<const Spectrum> spectrum_;
};

struct VectorField {
    ScalarField u1;
    ScalarField u2;
};

enum class Interp { Trigonometric, Bicubic };
enum class Norm { L1, L2, Linf };

const char* to_string(Interp scheme);

// Transforms
Spectrum forward(const TorusGrid& grid, std::span<const double> values);
std::vector<double> inverse(const Spectrum& spectrum);

/// Multiplies by (i k1)^order1 (i k2)^order2; Nyquist modes are dropped in any
/// direction with odd derivative order.
Spectrum derivative(const Spectrum& f, int order1, int order2);
Spectrum inverse_laplacian(const Spectrum& f);
/// Zeroes every mode with |k| > (2/3)(N/2) in index units.
Spectrum dealias(Spectrum f);
void dealias_in_place(Spectrum& f);
bool inside_dealias_band(const TorusGrid& grid, int k1, int k2);

/// Stream-function route u = grad^perp(Laplacian^{-1} omega); no mean check.
std::array<Spectrum, 2> velocity_spectra(const Spectrum& omega);
/// Velocity gradient spectra {d1u1, d2u1, d1u2} (d2u2 = -d1u1).
std::array<Spectrum, 3> velocity_gradient_spectra(const Spectrum& omega);

VectorField velocity_from_vorticity(const ScalarField& omega);
VectorField gradient(const ScalarField& f);
ScalarField divergence(const VectorField& u);
ScalarField curl(const VectorField& u);

double sample_at(const ScalarField& f, Point2 p, Interp scheme);
double sample_trig(const Spectrum& f, Point2 p);
double sample_bicubic(const TorusGrid& grid, std::span<const double> values, Point2 p);

double lp_norm(const ScalarField& f, Norm p);
double lp_norm(const TorusGrid& grid, std::span<const double> values, Norm p);
/// Squared L2 norm computed from spectral coefficients (discrete Parseval).
double l2_squared(const Spectrum& f);
/// Squared L2 norm of the gradient, sum |k|^2 |f_k|^2 with the Parseval weights.
double gradient_l2_squared(const Spectrum& f);
double mean(const ScalarField& f);
double max_abs(std::span<const double> values);
bool all_finite(std::span<const double> values);

}  // namespace vsl
