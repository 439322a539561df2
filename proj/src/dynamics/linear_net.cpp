#include "mlet/dynamics/linear_net.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mlet/error.hpp"
#include "mlet/linalg/decompose.hpp"
#include "mlet/linalg/rng.hpp"
#include "mlet/simd/kernels.hpp"

namespace mlet {

namespace {

constexpr double kDivergenceNorm = 1e6;
constexpr double kMinSpectralGap = 1e-6;

Mat diag_scaled(const Mat& left, std::span<const double> s, const Mat& right_t) {
  // left · diag(s) · right_tᵀ
  Mat scaled = left;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= s[j];
  return matmul_nt(scaled, right_t);
}

Mat random_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
  return qr_decompose(gaussian_mat(rows, cols, 1.0, rng)).q;
}

void check_divergence(const Mat& w, std::size_t step) {
  const double norm = frobenius_norm(w);
  if (!std::isfinite(norm) || norm > kDivergenceNorm) {
    throw Error(ErrorKind::kDivergence,
                "linear network diverged at step " + std::to_string(step) + " (|W|_F = " +
                    std::to_string(norm) + ")");
  }
}

TrajectoryPoint record(std::span<const Mat> factors, const Mat& target, std::size_t step,
                       double rel_threshold) {
  TrajectoryPoint p;
  const Mat w = end_to_end(factors);
  const Mat g = w - target;
  const double norm = frobenius_norm(g);
  p.step = step;
  p.loss = 0.5 * norm * norm;
  p.grad_norm = norm;
  p.spectrum = spectrum_of(w, rel_threshold, step);
  return p;
}

}  // namespace

double predicted_sv_update(double sigma, std::size_t depth, double lr, double inner) {
  if (sigma < 0.0) throw Error(ErrorKind::kInvalidArgument, "predicted_sv_update: negative sigma");
  if (depth == 0) throw Error(ErrorKind::kInvalidArgument, "predicted_sv_update: depth must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "predicted_sv_update: lr must be > 0");
  const double n = static_cast<double>(depth);
  const double factor = depth == 1 ? 1.0 : (sigma == 0.0 ? 0.0 : std::pow(sigma, 2.0 - 2.0 / n));
  return sigma - lr * n * factor * inner;
}

void validate(const LinearNetSpec& spec) {
  if (spec.dims.size() < 2) throw Error(ErrorKind::kInvalidArgument, "linear net needs dims [m, ..., n]");
  for (std::size_t d : spec.dims) {
    if (d == 0) throw Error(ErrorKind::kInvalidArgument, "linear net dims must be positive");
  }
  if (spec.target.rows() != spec.dims.front() || spec.target.cols() != spec.dims.back()) {
    throw Error(ErrorKind::kShapeMismatch, "target " + spec.target.shape_string() + " vs dims " +
                                               std::to_string(spec.dims.front()) + "x" +
                                               std::to_string(spec.dims.back()));
  }
  if (!(spec.lr > 0.0)) throw Error(ErrorKind::kInvalidArgument, "learning rate must be > 0");
  if (!(spec.init_std > 0.0)) throw Error(ErrorKind::kInvalidArgument, "init_std must be > 0");
  if (spec.record_interval == 0) throw Error(ErrorKind::kInvalidArgument, "record_interval must be >= 1");
}

std::vector<Mat> gaussian_init(const LinearNetSpec& spec) {
  validate(spec);
  const Rng root(spec.seed);
  std::vector<Mat> factors;
  for (std::size_t i = 0; i + 1 < spec.dims.size(); ++i) {
    Rng stream = root.split(i);
    factors.push_back(gaussian_mat(spec.dims[i], spec.dims[i + 1], spec.init_std, stream));
  }
  return factors;
}

std::vector<Mat> balanced_init(const LinearNetSpec& spec) {
  validate(spec);
  const Rng root(spec.seed);
  Rng seed_stream = root.split(0);
  const std::size_t m = spec.dims.front();
  const std::size_t n = spec.dims.back();
  const Mat seed_matrix = gaussian_mat(m, n, spec.init_std, seed_stream);
  const std::size_t depth = spec.depth();
  if (depth == 1) return {seed_matrix};

  const std::size_t p = std::min(m, n);
  for (std::size_t i = 1; i + 1 < spec.dims.size(); ++i) {
    if (spec.dims[i] < p) {
      throw Error(ErrorKind::kInvalidArgument, "balanced_init: hidden width " + std::to_string(spec.dims[i]) +
                                                   " < min(m, n) = " + std::to_string(p));
    }
  }
  const SvdResult usv = svd(seed_matrix);
  std::vector<double> root_s(p);
  for (std::size_t i = 0; i < p; ++i) root_s[i] = std::pow(usv.s[i], 1.0 / static_cast<double>(depth));

  std::vector<Mat> frames;  // O_1 … O_{N-1}, each k_i × p
  for (std::size_t i = 1; i < depth; ++i) {
    Rng stream = root.split(i);
    frames.push_back(random_orthonormal(spec.dims[i], p, stream));
  }
  std::vector<Mat> factors;
  factors.push_back(diag_scaled(usv.u, root_s, frames.front()));
  for (std::size_t i = 1; i + 1 < depth; ++i) {
    factors.push_back(diag_scaled(frames[i - 1], root_s, frames[i]));
  }
  factors.push_back(diag_scaled(frames.back(), root_s, usv.v));
  return factors;
}

Mat end_to_end(std::span<const Mat> factors) {
  if (factors.empty()) throw Error(ErrorKind::kInvalidArgument, "end_to_end: no factors");
  Mat w = factors.front();
  for (std::size_t i = 1; i < factors.size(); ++i) w = matmul(w, factors[i]);
  return w;
}

double linear_net_loss(std::span<const Mat> factors, const Mat& target) {
  const double norm = frobenius_norm(end_to_end(factors) - target);
  return 0.5 * norm * norm;
}

std::vector<Mat> linear_net_gradients(std::span<const Mat> factors, const Mat& target) {
  const std::size_t depth = factors.size();
  // prefix[i] = W_1…W_i (prefix[0] unused), suffix[i] = W_i…W_N.
  std::vector<Mat> prefix(depth + 1);
  std::vector<Mat> suffix(depth + 1);
  prefix[1] = factors[0];
  for (std::size_t i = 2; i <= depth; ++i) prefix[i] = matmul(prefix[i - 1], factors[i - 1]);
  suffix[depth] = factors[depth - 1];
  for (std::size_t i = depth - 1; i >= 1; --i) suffix[i] = matmul(factors[i - 1], suffix[i + 1]);

  const Mat residual = prefix[depth] - target;
  std::vector<Mat> grads(depth);
  for (std::size_t i = 1; i <= depth; ++i) {
    Mat g = (i > 1) ? matmul_tn(prefix[i - 1], residual) : residual;
    if (i < depth) g = matmul_nt(g, suffix[i + 1]);
    grads[i - 1] = std::move(g);
  }
  return grads;
}

void gradient_step(std::vector<Mat>& factors, const Mat& target, double lr) {
  const std::vector<Mat> grads = linear_net_gradients(factors, target);
  for (std::size_t i = 0; i < factors.size(); ++i) simd::axpy(-lr, grads[i].data(), factors[i].data());
}

SvTrajectory train_linear_net(const LinearNetSpec& spec) {
  validate(spec);
  return train_linear_net(spec, spec.init == LinearInit::kBalanced ? balanced_init(spec) : gaussian_init(spec));
}

SvTrajectory train_linear_net(const LinearNetSpec& spec, std::vector<Mat> factors) {
  validate(spec);
  if (factors.size() != spec.depth()) {
    throw Error(ErrorKind::kShapeMismatch, "initial factor count does not match dims");
  }
  SvTrajectory out;
  for (std::size_t step = 0;; ++step) {
    const Mat w = end_to_end(factors);
    check_divergence(w, step);
    const double loss = 0.5 * std::pow(frobenius_norm(w - spec.target), 2);
    const bool stop = spec.stop_loss.has_value() && loss <= *spec.stop_loss;
    if (step % spec.record_interval == 0 || step == spec.steps || stop) {
      out.points.push_back(record(factors, spec.target, step, spec.rel_threshold));
    }
    if (stop || step == spec.steps) {
      out.steps_run = step;
      out.reached_stop_loss = stop;
      break;
    }
    gradient_step(factors, spec.target, spec.lr);
  }
  out.final_factors = std::move(factors);
  return out;
}

Eq6Check eq6_step_check(std::span<const Mat> factors, const Mat& target, double lr) {
  const std::size_t depth = factors.size();
  const Mat w = end_to_end(factors);
  const SvdResult before = svd(w);
  for (std::size_t r = 0; r + 1 < before.s.size(); ++r) {
    if (before.s[r] - before.s[r + 1] < kMinSpectralGap) {
      throw Error(ErrorKind::kDegenerateSpectrum,
                  "singular values " + std::to_string(r) + " and " + std::to_string(r + 1) +
                      " are within 1e-6; reseed the initialization");
    }
  }
  const Mat grad_w = w - target;

  std::vector<Mat> next(factors.begin(), factors.end());
  gradient_step(next, target, lr);
  const std::vector<double> after = singular_values(end_to_end(next));

  Eq6Check check;
  check.sigma = before.s;
  for (std::size_t r = 0; r < before.s.size(); ++r) {
    // ⟨∇L, u_r v_rᵀ⟩ = u_rᵀ ∇L v_r
    double inner = 0.0;
    for (std::size_t i = 0; i < grad_w.rows(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < grad_w.cols(); ++j) row += grad_w(i, j) * before.v(j, r);
      inner += before.u(i, r) * row;
    }
    const double sigma = before.s[r];
    const double predicted = predicted_sv_update(sigma, depth, lr, inner) - sigma;
    const double empirical = after[r] - sigma;
    check.predicted_delta.push_back(predicted);
    check.empirical_delta.push_back(empirical);
    const double deviation = std::abs(empirical - predicted) / (lr * std::max(sigma, lr));
    check.max_deviation = std::max(check.max_deviation, deviation);
  }
  return check;
}

Eq6Report verify_eq6(const LinearNetSpec& spec, std::span<const std::size_t> steps_to_check) {
  validate(spec);
  std::vector<Mat> factors = balanced_init(spec);
  const std::set<std::size_t> wanted(steps_to_check.begin(), steps_to_check.end());
  Eq6Report report;
  if (wanted.empty()) return report;
  const std::size_t last = *wanted.rbegin();
  for (std::size_t step = 0; step <= last; ++step) {
    check_divergence(end_to_end(factors), step);
    if (wanted.contains(step)) {
      Eq6Check check = eq6_step_check(factors, spec.target, spec.lr);
      check.step = step;
      report.max_deviation = std::max(report.max_deviation, check.max_deviation);
      report.checks.push_back(std::move(check));
    }
    if (step < last) gradient_step(factors, spec.target, spec.lr);
  }
  return report;
}

Mat planted_rank1_target(std::size_t size, double noise, std::uint64_t seed, Mat* rank1_part) {
  Rng rng(seed);
  Rng vec_stream = rng.split(0);
  Rng noise_stream = rng.split(1);
  const Mat a = gaussian_mat(size, 1, 1.0, vec_stream);
  const Mat b = gaussian_mat(size, 1, 1.0, vec_stream);
  const Mat rank1 = (1.0 / std::sqrt(static_cast<double>(size))) * matmul_nt(a, b);
  Mat target = rank1;
  if (noise > 0.0) target = target + gaussian_mat(size, size, noise, noise_stream);
  if (rank1_part != nullptr) *rank1_part = rank1;
  return target;
}

PolarizationPair polarization_pair(const PolarizationConfig& config, std::uint64_t seed) {
  Mat rank1;
  const Mat target = planted_rank1_target(config.size, config.noise, seed, &rank1);
  const double noise_energy = 0.5 * std::pow(frobenius_norm(target - rank1), 2);

  PolarizationPair pair;
  pair.seed = seed;
  pair.stop_loss = config.loss_fraction * noise_energy;

  auto run = [&](std::size_t depth) {
    LinearNetSpec spec;
    spec.dims.assign(depth + 1, config.size);
    spec.target = target;
    spec.lr = config.lr;
    spec.steps = config.max_steps;
    spec.init = LinearInit::kGaussian;
    spec.init_std = config.init_std;
    spec.seed = Rng::mix64(seed + 0x5EED);
    spec.record_interval = config.max_steps;  // only endpoints
    spec.rel_threshold = config.rel_threshold;
    spec.stop_loss = pair.stop_loss;
    const SvTrajectory traj = train_linear_net(spec);
    if (!traj.reached_stop_loss) {
      throw Error(ErrorKind::kConvergence, "depth " + std::to_string(depth) +
                                               " run did not reach the matched loss within " +
                                               std::to_string(config.max_steps) + " steps");
    }
    const TrajectoryPoint& last = traj.points.back();
    DepthOutcome out;
    out.depth = depth;
    out.steps = traj.steps_run;
    out.final_loss = last.loss;
    out.singular_values = last.spectrum.singular_values;
    out.sv_ratio = out.singular_values.size() > 1 ? out.singular_values[1] / out.singular_values[0] : 0.0;
    out.effective_rank = last.spectrum.effective_rank;
    return out;
  };
  pair.shallow = run(1);
  pair.deep = run(2);
  return pair;
}

}  // namespace mlet
