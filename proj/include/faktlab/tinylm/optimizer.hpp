#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace faktlab::tinylm {

enum class OptimizerKind { Sgd, AdamW };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

struct AdamWParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// Minimizes: params -= lr * update(grad).
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<double> params, std::span<const double> grad, double lr) = 0;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::size_t num_params,
                                          const AdamWParams& adam = {});

}  // namespace faktlab::tinylm
