// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <numbers>
#include <optional>

#include "growbench/network.hpp"

namespace growbench {

struct SgdHyper {
  double lr_base = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
};

// Momentum buffers mirror the network parameter layout, one per tensor.
struct OptState {
  ParamSet velocity;
  SgdHyper hyper;

  static OptState for_network(const Network& net, SgdHyper hyper) {
    return {ParamSet::zeros_like(net), hyper};
  }
};

// v <- momentum * v + grad + weight_decay * param
// param <- param - lr * v
inline void sgd_step(Network& net, const ParamSet& grads, OptState& opt, double lr) {
  if (!grads.matches(net)) throw Error("sgd_step: gradient shapes do not match the network");
  if (!opt.velocity.matches(net))
    throw Error("sgd_step: momentum buffers do not match the network (missed resize after growth?)");
  const double mu = opt.hyper.momentum;
  const double wd = opt.hyper.weight_decay;
  const auto update = [&](std::vector<double>& param, std::vector<double>& vel,
                          const std::vector<double>& g) {
    for (std::size_t i = 0; i < param.size(); ++i) {
      vel[i] = mu * vel[i] + g[i] + wd * param[i];
      param[i] -= lr * vel[i];
    }
  };
  for (std::size_t s = 0; s < net.stages.size(); ++s)
    for (std::size_t b = 0; b < net.stages[s].blocks.size(); ++b) {
      auto& d = net.stages[s].blocks[b].dense;
      auto& v = opt.velocity.blocks[s][b];
      const auto& g = grads.blocks[s][b];
      update(d.weight.values(), v.weight.values(), g.weight.values());
      update(d.bias, v.bias, g.bias);
    }
  update(net.classifier.weight.values(), opt.velocity.classifier.weight.values(),
         grads.classifier.weight.values());
  update(net.classifier.bias, opt.velocity.classifier.bias, grads.classifier.bias);
}

// Constant lr_base while growing; cosine decay to zero from the epoch growth
// completed (growth_done) through the last epoch.
struct LrSchedule {
  double lr_base = 0.1;
  int total_epochs = 180;
};

inline double lr_at(const LrSchedule& sched, int epoch, std::optional<int> growth_done) {
  if (!growth_done || epoch < *growth_done) return sched.lr_base;
  const int span = sched.total_epochs - *growth_done;
  if (span <= 0) return sched.lr_base;
  const double progress = static_cast<double>(epoch - *growth_done) / static_cast<double>(span);
  return sched.lr_base * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace growbench
