#pragma once

#include <cstdint>
#include <vector>

#include "gnlab/explainers.hpp"
#include "gnlab/model.hpp"

namespace gnlab {

// Lazily yields the M weight-noise models of an ensemble. at(i) equals an
// individual perturb_weights call with the child seed for index i, so
// streaming and materializing give identical models.
class EnsembleStream {
public:
    EnsembleStream(const MlpModel& base, const EnhancerConfig& cfg);

    size_t size() const { return count_; }
    MlpModel at(size_t i) const;
    std::vector<MlpModel> materialize() const;

private:
    const MlpModel& base_;
    double sigma_;
    size_t count_;
    uint64_t base_seed_;
    bool perturb_bias_;
};

// Input-noise ensemble: mean over N explanations of x + xi_i,
// xi_i ~ N(0, sigma_sg^2 I). sigma_sg == 0 reduces to the base explainer
// bitwise (single call, member-0 seeds).
Attribution smoothgrad(const MlpModel& model, const Tensor& x, size_t class_index,
                       const ExplainerSpec& spec, const EnhancerConfig& cfg);

// Weight-noise ensemble: mean over M explanations under multiplicatively
// perturbed models. sigma_ng == 0 reduces to the base explainer bitwise.
Attribution noisegrad(const MlpModel& model, const Tensor& x, size_t class_index,
                      const ExplainerSpec& spec, const EnhancerConfig& cfg);

// Double ensemble over M perturbed models (outer) and N noisy inputs
// (inner); the N input draws are shared across models unless
// cfg.share_xi == false. Degenerate sigmas reduce bitwise to smoothgrad /
// noisegrad / the base explainer.
Attribution fusiongrad(const MlpModel& model, const Tensor& x, size_t class_index,
                       const ExplainerSpec& spec, const EnhancerConfig& cfg);

Attribution enhance(const MlpModel& model, const Tensor& x, size_t class_index,
                    const ExplainerSpec& spec, EnhancerKind kind,
                    const EnhancerConfig& cfg);

// Explainer seed used for ensemble member `index` (index 0 is also the seed
// of the degenerate single-call reductions).
uint64_t enhancer_member_seed(const EnhancerConfig& cfg, size_t index);

}  // namespace gnlab
