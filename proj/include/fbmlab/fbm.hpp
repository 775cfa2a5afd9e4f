#pragma once

#include <fftw3.h>

#include <Eigen/Dense>
#include <complex>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fbmlab/cameron_martin.hpp"
#include "fbmlab/covariance.hpp"
#include "fbmlab/rng.hpp"

namespace fbmlab {

enum class SampleMethod { cholesky, circulant, volterra };

inline const char* method_name(SampleMethod m) {
  switch (m) {
    case SampleMethod::cholesky: return "cholesky";
    case SampleMethod::circulant: return "circulant";
    case SampleMethod::volterra: return "volterra";
  }
  return "?";
}

/// One sampled d-dimensional fBm path.  values(i, k) is component i at grid
/// point k; values(:, 0) = 0.
struct FbmPath {
  HurstParam hurst;
  TimeGrid grid;
  Eigen::MatrixXd values;
  std::uint64_t seed = 0;
  SampleMethod method = SampleMethod::cholesky;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::uint64_t fbm_stream(std::uint64_t path_index, int component) {
  return RandomStream::stream_id(path_index,
                                 (rng_tag::fbm_increments << 8) | static_cast<std::uint32_t>(component));
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlan {
  fftw_plan plan = nullptr;
  std::size_t size = 0;

  explicit FftwPlan(std::size_t m) : size(m) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_complex* in = fftw_alloc_complex(m);
    fftw_complex* out = fftw_alloc_complex(m);
    plan = fftw_plan_dft_1d(static_cast<int>(m), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~FftwPlan() {
    if (plan) {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
  FftwPlan(const FftwPlan&) = delete;
  FftwPlan& operator=(const FftwPlan&) = delete;

  /// out = DFT(in); safe to call concurrently with distinct buffers.
  void execute(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan, in, out); }
};

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t m) : data(fftw_alloc_complex(m)) {}
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace detail

/// Reusable sampler: factorizations, embeddings and kernel tables are built
/// once per (H, grid, method) and shared read-only across worker threads.
class FbmSampler {
 public:
  FbmSampler(HurstParam hurst, TimeGrid grid, int dim, SampleMethod method)
      : hurst_(hurst), grid_(std::move(grid)), dim_(dim), method_(method) {
    grid_.validate();
    if (dim_ < 1 || dim_ > 255) throw DomainError("fBm dimension must lie in [1,255]");
    if (hurst_.is_brownian()) return;  // independent increments; no setup needed
    switch (method_) {
      case SampleMethod::cholesky: build_cholesky(); break;
      case SampleMethod::circulant: build_circulant(); break;
      case SampleMethod::volterra: build_volterra(); break;
    }
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  SampleMethod effective_method() const { return method_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  FbmPath sample(std::uint64_t seed, std::uint64_t path_index = 0) const {
    const std::size_t n = grid_.cells();
    Eigen::MatrixXd values(dim_, static_cast<Eigen::Index>(n + 1));
    values.setZero();
    std::vector<double> incr(n);
    for (int c = 0; c < dim_; ++c) {
      RandomStream stream(seed, detail::fbm_stream(path_index, c));
      make_increments(stream, incr);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        acc += incr[k];
        values(c, static_cast<Eigen::Index>(k + 1)) = acc;
      }
    }
    FbmPath p{hurst_, grid_, std::move(values), seed, method_, warnings_};
    return p;
  }

 private:
  void build_cholesky() {
    const Eigen::MatrixXd G = increment_covariance_matrix(hurst_, grid_);
    Eigen::LLT<Eigen::MatrixXd> llt(G);
    if (llt.info() != Eigen::Success)
      throw DomainError("increment covariance is not positive definite");
    chol_ = llt.matrixL();
  }

  void build_circulant() {
    if (!grid_.uniform) throw DomainError("circulant embedding requires a uniform grid");
    const std::size_t n = grid_.cells();
    const std::size_t m = 2 * n;
    std::vector<double> c(m);
    for (std::size_t k = 0; k <= n; ++k) c[k] = fgn_autocovariance(hurst_, grid_.dt(0), k);
    for (std::size_t k = n + 1; k < m; ++k) c[k] = c[m - k];

    plan_ = std::make_shared<detail::FftwPlan>(m);
    detail::FftwBuffer in(m), out(m);
    for (std::size_t k = 0; k < m; ++k) {
      in.data[k][0] = c[k];
      in.data[k][1] = 0.0;
    }
    plan_->execute(in.data, out.data);

    eigenvalues_.resize(m);
    double trace = 0.0, min_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      eigenvalues_[k] = out.data[k][0];
      trace += std::abs(eigenvalues_[k]);
      min_eig = std::min(min_eig, eigenvalues_[k]);
    }
    if (min_eig < -1e-9 * trace) {
      warnings_.push_back("circulant embedding not nonnegative definite (min eigenvalue " +
                          std::to_string(min_eig) + "); fell back to cholesky");
      method_ = SampleMethod::cholesky;
      eigenvalues_.clear();
      plan_.reset();
      build_cholesky();
      return;
    }
    for (auto& ev : eigenvalues_) ev = std::sqrt(std::max(ev, 0.0) / static_cast<double>(m));
  }

  void build_volterra() {
    // kernel_table_(j, i) = K(t_{j+1}, m_i) for i <= j: left-point quadrature
    // weights of the Volterra representation with midpoint kernel evaluation.
    const std::size_t n = grid_.cells();
    kernel_table_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    kernel_table_.setZero();
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t i = 0; i <= j; ++i)
        kernel_table_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
            volterra_kernel(hurst_, grid_.points[j + 1], grid_.midpoint(i));
  }

  void make_increments(const RandomStream& stream, std::vector<double>& incr) const {
    const std::size_t n = grid_.cells();
    if (hurst_.is_brownian()) {
      // exact for every method: Brownian increments are independent
      stream.normals(n, incr.data());
      for (std::size_t k = 0; k < n; ++k) incr[k] *= std::sqrt(grid_.dt(k));
      return;
    }
    switch (method_) {
      case SampleMethod::cholesky: {
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        stream.normals(n, z.data());
        Eigen::VectorXd x = chol_.triangularView<Eigen::Lower>() * z;
        for (std::size_t k = 0; k < n; ++k) incr[k] = x(static_cast<Eigen::Index>(k));
        return;
      }
      case SampleMethod::circulant: {
        const std::size_t m = 2 * n;
        detail::FftwBuffer in(m), out(m);
        // Hermitian-symmetric spectrum drawn from the stream
        in.data[0][0] = eigenvalues_[0] * stream.normal(0);
        in.data[0][1] = 0.0;
        in.data[n][0] = eigenvalues_[n] * stream.normal(1);
        in.data[n][1] = 0.0;
        const double inv_sqrt2 = 0.70710678118654752440;
        for (std::size_t k = 1; k < n; ++k) {
          const double u = stream.normal(2 * k);
          const double v = stream.normal(2 * k + 1);
          in.data[k][0] = eigenvalues_[k] * u * inv_sqrt2;
          in.data[k][1] = eigenvalues_[k] * v * inv_sqrt2;
          in.data[m - k][0] = in.data[k][0];
          in.data[m - k][1] = -in.data[k][1];
        }
        plan_->execute(in.data, out.data);
        for (std::size_t k = 0; k < n; ++k) incr[k] = out.data[k][0];
        return;
      }
      case SampleMethod::volterra: {
        // B_{t_j} = sum_{i<j} K(t_j, m_i) dW_i, returned as increments
        std::vector<double> dw(n);
        stream.normals(n, dw.data());
        for (std::size_t k = 0; k < n; ++k) dw[k] *= std::sqrt(grid_.dt(k));
        double prev = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          double b = 0.0;
          for (std::size_t i = 0; i <= j; ++i)
            b += kernel_table_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * dw[i];
          incr[j] = b - prev;
          prev = b;
        }
        return;
      }
    }
  }

  HurstParam hurst_;
  TimeGrid grid_;
  int dim_;
  SampleMethod method_;
  Eigen::MatrixXd chol_;
  Eigen::MatrixXd kernel_table_;
  std::vector<double> eigenvalues_;
  std::shared_ptr<detail::FftwPlan> plan_;
  std::vector<std::string> warnings_;
};

/// One-shot sampling entry point.
inline FbmPath sample_fbm(const HurstParam& hurst, const TimeGrid& grid, int dim,
                          std::uint64_t seed, SampleMethod method,
                          std::uint64_t path_index = 0) {
  return FbmSampler(hurst, grid, dim, method).sample(seed, path_index);
}

/// 2-d rho-variation of the covariance over dyadic partitions of [0,T] up to
/// `max_level`, with rho = max(1, 1/(2H)).  For H >= 1/2 the increment
/// covariances are nonnegative and the finite-variation index is 1 (the sum
/// with any rho < 1 diverges under refinement).  Dyadic levels give a
/// certified lower bound of the full partition supremum; the running maximum
/// is returned.
inline double rho_variation_2d(const HurstParam& hurst, double horizon, int max_level) {
  if (!(horizon > 0.0)) throw DomainError("rho_variation_2d needs a positive horizon");
  const double rho = std::max(1.0, 1.0 / (2.0 * hurst.value()));
  double best = 0.0;
  for (int level = 1; level <= max_level; ++level) {
    const std::size_t n = static_cast<std::size_t>(1) << level;
    const double dt = horizon / static_cast<double>(n);
    std::vector<double> gamma(n);
    for (std::size_t k = 0; k < n; ++k) gamma[k] = fgn_autocovariance(hurst, dt, k);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const auto lag = static_cast<std::size_t>(
            std::abs(static_cast<long long>(i) - static_cast<long long>(j)));
        acc += std::pow(std::abs(gamma[lag]), rho);
      }
    best = std::max(best, std::pow(acc, 1.0 / rho));
  }
  return best;
}

inline double rho_variation_2d(const HurstParam& hurst, const TimeGrid& grid,
                               int max_level = 10) {
  return rho_variation_2d(hurst, grid.horizon(), max_level);
}

}  // namespace fbmlab
