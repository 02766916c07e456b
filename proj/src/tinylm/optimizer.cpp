#include "faktlab/tinylm/optimizer.hpp"

#include <cmath>

#include "faktlab/error.hpp"

namespace faktlab::tinylm {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "adamw";
}

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adamw") return OptimizerKind::AdamW;
  fail(ErrorKind::Config, "unknown optimizer '" + name + "'");
}

namespace {

class Sgd final : public Optimizer {
 public:
  void step(std::span<double> params, std::span<const double> grad, double lr) override {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
  }
};

class AdamW final : public Optimizer {
 public:
  AdamW(std::size_t n, const AdamWParams& hp) : hp_(hp), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) override {
    ++t_;
    const double c1 = 1.0 - std::pow(hp_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(hp_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = hp_.beta1 * m_[i] + (1.0 - hp_.beta1) * grad[i];
      v_[i] = hp_.beta2 * v_[i] + (1.0 - hp_.beta2) * grad[i] * grad[i];
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      params[i] -= lr * (mhat / (std::sqrt(vhat) + hp_.eps) + hp_.weight_decay * params[i]);
    }
  }

 private:
  AdamWParams hp_;
  std::vector<double> m_, v_;
  std::uint64_t t_ = 0;
};

}  // namespace

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t num_params,
                                          const AdamWParams& adam) {
  if (kind == OptimizerKind::Sgd) return std::make_unique<Sgd>();
  return std::make_unique<AdamW>(num_params, adam);
}

}  // namespace faktlab::tinylm
