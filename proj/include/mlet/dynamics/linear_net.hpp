#pragma once

// Deep linear network laboratory.
//
// A chain of factors W1·W2·…·WN is trained by full-batch gradient descent on
// L(W) = ½‖W − T‖²_F for a planted target T, and the spectrum of the
// end-to-end product is tracked over time. Under balanced initialization the
// singular values of W follow, to first order in the step size,
//
//   σ_r(t+1) = σ_r(t) − η · N · σ_r(t)^(2 − 2/N) · ⟨∇L(W(t)), u_r v_rᵀ⟩,
//
// which attenuates updates to small singular values when N >= 2.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mlet/dynamics/spectrum.hpp"
#include "mlet/linalg/mat.hpp"

namespace mlet {

enum class LinearInit { kBalanced, kGaussian };

struct LinearNetSpec {
  std::vector<std::size_t> dims;  // [m, k1, ..., n]; depth N = dims.size() - 1
  Mat target;                     // m × n
  double lr = 1e-3;
  std::size_t steps = 100;
  LinearInit init = LinearInit::kGaussian;
  // Entry std of each Gaussian factor, or of the seed end-to-end matrix that
  // balanced_init distributes across factors.
  double init_std = 0.25;
  std::uint64_t seed = 0;
  std::size_t record_interval = 10;
  double rel_threshold = kDefaultRankThreshold;
  // Stop at the first step whose loss is <= this value (matched-loss runs).
  std::optional<double> stop_loss;

  std::size_t depth() const noexcept { return dims.empty() ? 0 : dims.size() - 1; }
};

struct TrajectoryPoint {
  std::size_t step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;  // ‖∇L(W(t))‖_F with respect to the end-to-end W
  SpectrumReport spectrum;
};

struct SvTrajectory {
  std::vector<TrajectoryPoint> points;  // strictly increasing steps
  std::vector<Mat> final_factors;
  std::size_t steps_run = 0;
  bool reached_stop_loss = false;
};

// Closed-form singular-value update. For N == 1 the σ-dependent factor is
// exactly 1; for N >= 2, σ == 0 is a fixed point.
double predicted_sv_update(double sigma, std::size_t depth, double lr, double inner);

void validate(const LinearNetSpec& spec);

std::vector<Mat> gaussian_init(const LinearNetSpec& spec);
// Factors with W_{i+1}·W_{i+1}ᵀ = W_iᵀ·W_i whose product is a seeded Gaussian
// matrix M = U S Vᵀ: W_1 = U S^{1/N} O_1ᵀ, W_i = O_{i-1} S^{1/N} O_iᵀ,
// W_N = O_{N-1} S^{1/N} Vᵀ with random orthonormal O_i. Requires every hidden
// width to be >= min(m, n).
std::vector<Mat> balanced_init(const LinearNetSpec& spec);

Mat end_to_end(std::span<const Mat> factors);
double linear_net_loss(std::span<const Mat> factors, const Mat& target);
// Per-factor gradients: ∂L/∂W_i = (W_1…W_{i-1})ᵀ (W − T) (W_{i+1}…W_N)ᵀ.
std::vector<Mat> linear_net_gradients(std::span<const Mat> factors, const Mat& target);
void gradient_step(std::vector<Mat>& factors, const Mat& target, double lr);

// Throws ErrorKind::kDivergence if ‖W‖_F exceeds 1e6 or turns non-finite.
SvTrajectory train_linear_net(const LinearNetSpec& spec);
SvTrajectory train_linear_net(const LinearNetSpec& spec, std::vector<Mat> initial_factors);

struct Eq6Check {
  std::size_t step = 0;
  std::vector<double> sigma;
  std::vector<double> empirical_delta;
  std::vector<double> predicted_delta;
  double max_deviation = 0.0;
};

struct Eq6Report {
  std::vector<Eq6Check> checks;
  double max_deviation = 0.0;
};

// Compares one gradient step's singular-value changes against the closed
// form. Deviation per value is |Δσ_emp − Δσ_pred| / (lr · max(σ_r, lr)).
// Throws ErrorKind::kDegenerateSpectrum when two singular values are closer
// than 1e-6 (the index matching across the step is then ambiguous).
Eq6Check eq6_step_check(std::span<const Mat> factors, const Mat& target, double lr);

// Balanced init, then gradient descent; checks the steps listed.
Eq6Report verify_eq6(const LinearNetSpec& spec, std::span<const std::size_t> steps_to_check);

// Paired depth comparison on a rank-1-plus-noise target at matched loss.
struct PolarizationConfig {
  std::size_t size = 10;  // target is size × size
  double noise = 0.05;
  double init_std = 0.25;
  double lr = 0.02;
  std::size_t max_steps = 200000;
  // Matched loss: stop once L <= fraction · ½‖T − rank-1 part‖²_F.
  double loss_fraction = 0.5;
  double rel_threshold = kDefaultRankThreshold;
};

struct DepthOutcome {
  std::size_t depth = 0;
  std::size_t steps = 0;
  double final_loss = 0.0;
  double sv_ratio = 0.0;  // σ2/σ1 of the end-to-end matrix
  std::size_t effective_rank = 0;
  std::vector<double> singular_values;
};

struct PolarizationPair {
  std::uint64_t seed = 0;
  double stop_loss = 0.0;
  DepthOutcome shallow;  // N = 1
  DepthOutcome deep;     // N = 2
};

Mat planted_rank1_target(std::size_t size, double noise, std::uint64_t seed, Mat* rank1_part = nullptr);
PolarizationPair polarization_pair(const PolarizationConfig& config, std::uint64_t seed);

}  // namespace mlet
