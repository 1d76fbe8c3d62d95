#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lawkit/dsl/eval.hpp"
#include "lawkit/fit/scene.hpp"

namespace lawkit::fit {

/// Loss assigned to failed candidates; worse than any real loss.
inline constexpr double kFailureSentinel = 1e9;

enum class ValidityCheck { None, ProbeBattery, RestStress, Probation };
const char* to_string(ValidityCheck c);

struct ValidityReport {
  bool valid = true;
  ValidityCheck failed = ValidityCheck::None;
  std::string message;
  std::vector<std::string> warnings;
};

/// The fixed probe deformation gradients, in order.
struct Probe {
  std::string name;
  Mat3 F;
};
const std::vector<Probe>& probe_battery();

/// Probation settings: substeps and the seeded velocity jitter (m/s) that
/// seeds deformation so unstable laws show themselves.
struct ProbationOptions {
  int substeps = 50;
  double velocity_jitter = 0.05;
};

ValidityReport probe_validity(const dsl::TypedLaw& law, const dsl::ParamVector& theta,
                              const Scene& scene, const ProbationOptions& opts = {});

struct LossEval {
  double loss = kFailureSentinel;
  std::optional<std::string> failure;
  bool ok() const { return !failure.has_value(); }
};

/// Loss of already-simulated output against the observation. `pred_frames`
/// may be empty in chamfer mode.
double total_loss(const sim::Trajectory& pred, const FrameSet& pred_frames, const SceneObservation& obs);

/// Simulate (and render if needed) then score. Failures map to the sentinel.
LossEval evaluate_loss(const dsl::TypedLaw& law, const dsl::ParamVector& theta, const Scene& scene);

/// Unit-box optimisation coordinates: log-scale params use
/// (ln x - ln lo) / (ln hi - ln lo), others (x - lo) / (hi - lo).
std::vector<double> to_unit(const dsl::TypedLaw& law, const dsl::ParamVector& theta);
dsl::ParamVector from_unit(const dsl::TypedLaw& law, std::span<const double> u);

struct GradResult {
  std::vector<double> grad;
  std::vector<bool> degenerate;  // both probes unusable; grad is 0 there
  int evaluations = 0;
};

struct FdOptions {
  double rel_step = 1e-3;
  bool bounded = false;  // treat probes outside [0,1] as unavailable
  int threads = 1;
};

/// Central differences with h_i = max(rel_step |x_i|, rel_step * 0.01); a
/// non-finite or sentinel probe falls back to the one-sided difference.
/// `f0` is the objective at x (evaluated if not given).
GradResult finite_diff_grad(const std::function<double(std::span<const double>)>& objective,
                            std::span<const double> x, const FdOptions& opts = {},
                            std::optional<double> f0 = std::nullopt);

struct Feedback {
  std::vector<std::pair<int, double>> loss_curve;  // at most 20 points, keeps the minimum
  dsl::ParamVector theta_init;
  dsl::ParamVector theta_final;
  std::vector<std::pair<int, dsl::ParamVector>> theta_trajectory;
  std::optional<std::string> failure;
  std::vector<std::string> warnings;
  double wall_time = 0.0;  // s
};

struct Fitted {
  dsl::ParamVector theta_star;
  double fitness = kFailureSentinel;
  Feedback feedback;
  std::vector<double> full_loss_curve;  // every recorded iteration
};

/// Monotone transform Adam descends; fitness is always the raw loss.
enum class Descent { Raw, Sqrt, Log };

struct OptimizeOptions {
  int budget = 60;
  Descent descent = Descent::Sqrt;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double rel_step = 1e-3;
  int threads = 1;
  ProbationOptions probation;
};

/// Adam over unit-box coordinates starting at the law's declared inits.
Fitted optimize_params(const dsl::TypedLaw& law, const Scene& scene, const OptimizeOptions& opts = {});

/// Even subsample of at most `max_points` indices of [0, n) that always
/// includes 0, n-1 and `keep`.
std::vector<std::size_t> downsample_indices(std::size_t n, std::size_t keep, std::size_t max_points = 20);

nlohmann::json to_json(const Feedback& f, const dsl::TypedLaw& law);
nlohmann::json to_json(const Fitted& f, const dsl::TypedLaw& law);
Fitted fitted_from_json(const nlohmann::json& j);
std::string loss_curve_csv(const std::vector<std::pair<int, double>>& curve);

}  // namespace lawkit::fit
