#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gnlab/dataset.hpp"
#include "gnlab/tensor.hpp"

namespace gnlab {

enum class Activation {
    relu,
    identity,
};

struct Layer {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]
    Activation activation = Activation::relu;

    size_t in_dim() const { return weight.cols(); }
    size_t out_dim() const { return weight.rows(); }
};

// Dense feed-forward network. Layer dims chain and the final activation is
// identity, so forward() returns raw logits. Models are value types: cheap
// to copy at desk scale, immutable everywhere except inside train().
class MlpModel {
public:
    explicit MlpModel(std::vector<Layer> layers);

    // dims = [input, hidden..., output]; hidden layers ReLU, final identity.
    // Weights ~ N(0, 1/sqrt(fan_in)), biases zero.
    static MlpModel random(const std::vector<size_t>& dims, uint64_t seed);

    size_t input_dim() const { return layers_.front().in_dim(); }
    size_t output_dim() const { return layers_.back().out_dim(); }
    size_t num_layers() const { return layers_.size(); }
    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers_mut() { return layers_; }

private:
    std::vector<Layer> layers_;
};

bool bitwise_equal(const MlpModel& a, const MlpModel& b);

// Forward intermediates for exactly one recorded pass: activations[0] is the
// input, activations[l+1] and preacts[l] belong to layer l.
struct GradTape {
    std::vector<Tensor> activations;
    std::vector<Tensor> preacts;
};

Tensor forward(const MlpModel& model, const Tensor& x);
GradTape forward_tape(const MlpModel& model, const Tensor& x);

// d(logit_c)/dx by reverse-mode replay over the tape. The ReLU derivative at
// exactly 0 is taken as 0.
Tensor grad_input(const MlpModel& model, const Tensor& x, size_t class_index);

// d(activation of unit `unit` after layer `layer`)/dx; the class logit is
// the special case layer == num_layers()-1.
Tensor grad_unit(const MlpModel& model, const Tensor& x, size_t layer, size_t unit);

struct TrainConfig {
    size_t epochs = 50;
    double learning_rate = 0.05;
    double momentum = 0.0;  // v <- momentum*v + g; w <- w - lr*v
    size_t batch_size = 32;
    uint64_t seed = 0;
};

struct TrainReport {
    std::vector<double> train_loss;      // mean cross-entropy per epoch
    std::vector<double> train_accuracy;  // per epoch
    std::vector<double> test_accuracy;   // per epoch; empty when no test set
};

// Minibatch SGD on softmax cross-entropy. Shuffling is seeded per epoch, so
// training is fully deterministic. Throws ErrorKind::numeric naming the
// epoch if the loss goes non-finite.
TrainReport train(MlpModel& model, const Dataset& train_data,
                  const Dataset* test_data, const TrainConfig& config);

// Fresh model with every weight entry (and bias entry, when include_bias)
// multiplied by an independent N(1, sigma_ng^2) draw. Draw order: per layer,
// weights row-major, then biases. sigma_ng == 0 returns a bitwise copy.
MlpModel perturb_weights(const MlpModel& model, double sigma_ng, uint64_t seed,
                         bool include_bias = true);

// Fraction of samples with argmax(logits) == label; argmax ties broken by
// the lowest class index.
double accuracy(const MlpModel& model, const Dataset& data);

size_t predict_class(const MlpModel& model, const Tensor& x);

void save_model(const MlpModel& model, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace gnlab
