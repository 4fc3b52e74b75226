#include "hli/optim.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "hli/error.hpp"

namespace hli {

AdamState make_adam(const AdamConfig& config, std::span<const TensorView> params) {
  if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0))
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  if (config.decay_every == 0) throw std::invalid_argument("decay_every must be >= 1");
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.values.size(), 0.0);
    s.second_moment.emplace_back(p.values.size(), 0.0);
  }
  return s;
}

double current_lr(const AdamState& s) {
  const auto& c = s.config;
  // Repeated multiplication keeps the decayed values on the decimal grid
  // (0.001 -> 0.0001 -> 1e-05) where pow() would round differently.
  double lr = c.base_lr;
  for (std::uint64_t k = s.step / c.decay_every; k > 0 && lr != 0.0; --k) lr *= c.decay_factor;
  return lr;
}

void adam_step(AdamState& s, std::span<const TensorView> params, std::span<const TensorView> grads) {
  if (params.size() != s.first_moment.size() || grads.size() != params.size())
    throw std::invalid_argument("adam_step: tensor count mismatch");
  const auto& c = s.config;
  const double lr = current_lr(s);
  const double t = static_cast<double>(s.step + 1);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);

  // Compute into scratch first so a non-finite update leaves the state intact.
  std::vector<Vector> next_params(params.size()), next_m(params.size()), next_v(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto p = params[i].values;
    const auto g = grads[i].values;
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: shape mismatch for " + params[i].name);
    next_params[i].resize(p.size());
    next_m[i].resize(p.size());
    next_v[i].resize(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double m = c.beta1 * s.first_moment[i][k] + (1.0 - c.beta1) * g[k];
      const double v = c.beta2 * s.second_moment[i][k] + (1.0 - c.beta2) * g[k] * g[k];
      const double step = (m / bc1) / (std::sqrt(v / bc2) + c.eps);
      const double updated = p[k] - lr * (step + c.weight_decay * p[k]);
      if (!std::isfinite(updated)) throw NumericError("non-finite Adam update in " + params[i].name);
      next_params[i][k] = updated;
      next_m[i][k] = m;
      next_v[i][k] = v;
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(next_params[i].begin(), next_params[i].end(), params[i].values.begin());
  }
  s.first_moment = std::move(next_m);
  s.second_moment = std::move(next_v);
  ++s.step;
}

}  // namespace hli
