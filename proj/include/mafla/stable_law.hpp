#pragma once

#include <cstddef>
#include <vector>

#include "mafla/common.hpp"
#include "mafla/rng.hpp"

namespace mafla::stable {

enum class Isotropy { isotropic, product };

/// Symmetric alpha-stable law SaS(scale) in `dim` dimensions.
///
/// The isotropic law has characteristic function exp(-scale^alpha |u|^alpha);
/// the product law is a product of independent one-dimensional laws.
struct StableLaw {
  double alpha = 2.0;
  double scale = 1.0;
  std::size_t dim = 1;
  Isotropy isotropy = Isotropy::isotropic;

  void validate() const;
  /// Real-valued characteristic function at frequency u (length dim).
  double characteristic(ConstSpan u) const;
};

/// Draw one unit-scale SaS variate (Chambers-Mallows-Stuck). alpha in (0, 2].
double draw_unit(double alpha, RngStream& rng);

/// Draw one unit-scale isotropic SaS vector via sub-Gaussian mixing. alpha in (1, 2].
/// At alpha = 2 only normals are consumed: out = sqrt(2) * z.
void draw_isotropic_unit(double alpha, MutSpan out, RngStream& rng);

std::vector<double> sample_sas_1d(double alpha, double scale, std::size_t n, RngStream& rng);
Matrix sample_sas_isotropic(double alpha, double scale, std::size_t dim, std::size_t n, RngStream& rng);
Matrix sample(const StableLaw& law, std::size_t n, RngStream& rng);

/// Density of the unit-scale 1-D law by numerical Fourier inversion. alpha in [1, 2].
double pdf_sas_1d(double alpha, double x);
/// d/dx log pdf_sas_1d(alpha, x).
double score_sas_1d(double alpha, double x);

/// Density of the unit isotropic law in R^dim at radius r (dim <= 4), by
/// Hankel-transform quadrature, switching to the asymptotic tail series far out.
double radial_density(double alpha, std::size_t dim, double r);
/// d/dr log radial_density, from the identity f_d'(r) = -2 pi r f_{d+2}(r).
double radial_score(double alpha, std::size_t dim, double r);

/// Raw quadrature of the radial density, with optional step refinement until
/// successive estimates agree to 1e-8 relative. Throws NumericError otherwise.
double radial_density_quadrature(double alpha, std::size_t dim, double r, bool refine = true);
/// Asymptotic (Bergstrom-type) tail series of the radial density.
double radial_density_tail_series(double alpha, std::size_t dim, double r);

/// |ECF(u) - exp(-scale^alpha |u|^alpha)| for each u in the grid.
std::vector<double> ecf_check(ConstSpan samples, ConstSpan u_grid, double alpha, double scale = 1.0);
/// Empirical characteristic function value (real, imaginary) of 1-D samples.
std::pair<double, double> ecf(ConstSpan samples, double u);

/// Tabulated log-density and radial score of the unit isotropic law, used by
/// targets where the score is evaluated millions of times. Cubic Hermite
/// interpolation inside the table, tail series beyond it.
class RadialTable {
 public:
  RadialTable(double alpha, std::size_t dim);

  double alpha() const { return alpha_; }
  std::size_t dim() const { return dim_; }
  double log_pdf(double r) const;
  double score(double r) const;
  double switch_radius() const { return r_max_; }

 private:
  double tail_log_pdf(double r) const;
  double tail_score(double r) const;

  double alpha_;
  std::size_t dim_;
  bool gaussian_;
  double step_ = 0.01;
  double r_max_ = 0.0;
  std::vector<double> log_f_;
  std::vector<double> g_;
  std::vector<double> dg_;
  // tail series: f(r) = sum_k coef_k r^{-alpha k - dim}
  std::vector<double> tail_coef_;
};

/// Shared cached table for (alpha, dim); thread-safe.
const RadialTable& radial_table(double alpha, std::size_t dim);

}  // namespace mafla::stable
