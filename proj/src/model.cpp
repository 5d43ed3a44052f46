#include "gnlab/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gnlab/errors.hpp"
#include "gnlab/rng.hpp"

namespace gnlab {

namespace {

double apply_activation(Activation act, double z) {
    switch (act) {
        case Activation::relu:
            return z > 0.0 ? z : 0.0;
        case Activation::identity:
            return z;
    }
    return z;
}

// Subgradient choice: relu'(0) = 0.
double activation_derivative(Activation act, double z) {
    switch (act) {
        case Activation::relu:
            return z > 0.0 ? 1.0 : 0.0;
        case Activation::identity:
            return 1.0;
    }
    return 1.0;
}

const char* activation_name(Activation act) {
    return act == Activation::relu ? "relu" : "identity";
}

Activation activation_from_name(const std::string& name, const std::string& path) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    raise(ErrorKind::format, path + ": unknown activation '" + name + "'");
}

}  // namespace

MlpModel::MlpModel(std::vector<Layer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), ErrorKind::invalid_argument, "MlpModel: no layers");
    for (size_t l = 0; l < layers_.size(); ++l) {
        const Layer& layer = layers_[l];
        require(layer.weight.shape.size() == 2, ErrorKind::invalid_argument,
                "MlpModel: weight must be 2d");
        require(layer.bias.shape.size() == 1 && layer.bias.size() == layer.out_dim(),
                ErrorKind::invalid_argument, "MlpModel: bias dim mismatch");
        if (l + 1 < layers_.size()) {
            require(layer.out_dim() == layers_[l + 1].in_dim(),
                    ErrorKind::invalid_argument, "MlpModel: layer dims do not chain");
        }
    }
    require(layers_.back().activation == Activation::identity,
            ErrorKind::invalid_argument, "MlpModel: final layer must be identity (logits)");
}

MlpModel MlpModel::random(const std::vector<size_t>& dims, uint64_t seed) {
    require(dims.size() >= 2, ErrorKind::invalid_argument,
            "MlpModel::random: need at least [input, output] dims");
    Rng rng = Rng::child(seed, stream::model_init, 0);
    std::vector<Layer> layers;
    layers.reserve(dims.size() - 1);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const size_t in = dims[l];
        const size_t out = dims[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(in));
        Tensor weight = Tensor::zeros({out, in});
        for (double& w : weight.data) {
            w = rng.normal(0.0, scale);
        }
        Layer layer;
        layer.weight = std::move(weight);
        layer.bias = Tensor::zeros({out});
        layer.activation = (l + 2 == dims.size()) ? Activation::identity : Activation::relu;
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers));
}

bool bitwise_equal(const MlpModel& a, const MlpModel& b) {
    if (a.num_layers() != b.num_layers()) {
        return false;
    }
    for (size_t l = 0; l < a.num_layers(); ++l) {
        const Layer& la = a.layers()[l];
        const Layer& lb = b.layers()[l];
        if (la.activation != lb.activation || !bitwise_equal(la.weight, lb.weight) ||
            !bitwise_equal(la.bias, lb.bias)) {
            return false;
        }
    }
    return true;
}

Tensor forward(const MlpModel& model, const Tensor& x) {
    require(x.size() == model.input_dim(), ErrorKind::invalid_argument,
            "forward: input dim mismatch");
    std::vector<double> a = x.data;
    std::vector<double> z;
    for (const Layer& layer : model.layers()) {
        const size_t out = layer.out_dim();
        const size_t in = layer.in_dim();
        z.assign(out, 0.0);
        for (size_t r = 0; r < out; ++r) {
            double acc = layer.bias[r];
            const double* wrow = layer.weight.data.data() + r * in;
            for (size_t c = 0; c < in; ++c) {
                acc += wrow[c] * a[c];
            }
            z[r] = apply_activation(layer.activation, acc);
        }
        a.swap(z);
    }
    return Tensor::vector(std::move(a));
}

GradTape forward_tape(const MlpModel& model, const Tensor& x) {
    require(x.size() == model.input_dim(), ErrorKind::invalid_argument,
            "forward_tape: input dim mismatch");
    GradTape tape;
    tape.activations.push_back(x);
    for (const Layer& layer : model.layers()) {
        const Tensor& a = tape.activations.back();
        const size_t out = layer.out_dim();
        const size_t in = layer.in_dim();
        Tensor z = Tensor::zeros({out});
        Tensor act = Tensor::zeros({out});
        for (size_t r = 0; r < out; ++r) {
            double acc = layer.bias[r];
            const double* wrow = layer.weight.data.data() + r * in;
            for (size_t c = 0; c < in; ++c) {
                acc += wrow[c] * a[c];
            }
            z[r] = acc;
            act[r] = apply_activation(layer.activation, acc);
        }
        tape.preacts.push_back(std::move(z));
        tape.activations.push_back(std::move(act));
    }
    return tape;
}

namespace {

// Backward replay from d(out)/d(preact of layer `top`) down to d(out)/dx.
Tensor backward_to_input(const MlpModel& model, const GradTape& tape,
                         size_t top, Tensor dz) {
    // dz enters as d(out)/d(preact of layer l) on every iteration.
    for (size_t l = top + 1; l-- > 0;) {
        const Layer& layer = model.layers()[l];
        const size_t out = layer.out_dim();
        const size_t in = layer.in_dim();
        Tensor da_prev = Tensor::zeros({in});
        for (size_t r = 0; r < out; ++r) {
            const double g = dz[r];
            if (g == 0.0) {
                continue;
            }
            const double* wrow = layer.weight.data.data() + r * in;
            for (size_t c = 0; c < in; ++c) {
                da_prev[c] += g * wrow[c];
            }
        }
        if (l == 0) {
            return da_prev;
        }
        const Layer& below = model.layers()[l - 1];
        const Tensor& z_below = tape.preacts[l - 1];
        Tensor dz_below = Tensor::zeros({below.out_dim()});
        for (size_t r = 0; r < below.out_dim(); ++r) {
            dz_below[r] = da_prev[r] * activation_derivative(below.activation, z_below[r]);
        }
        dz = std::move(dz_below);
    }
    return dz;  // unreachable for valid models
}

}  // namespace

Tensor grad_input(const MlpModel& model, const Tensor& x, size_t class_index) {
    require(class_index < model.output_dim(), ErrorKind::invalid_argument,
            "grad_input: class_index out of range");
    return grad_unit(model, x, model.num_layers() - 1, class_index);
}

Tensor grad_unit(const MlpModel& model, const Tensor& x, size_t layer, size_t unit) {
    require(layer < model.num_layers(), ErrorKind::invalid_argument,
            "grad_unit: layer out of range");
    require(unit < model.layers()[layer].out_dim(), ErrorKind::invalid_argument,
            "grad_unit: unit out of range");
    GradTape tape = forward_tape(model, x);
    const Layer& top = model.layers()[layer];
    Tensor dz = Tensor::zeros({top.out_dim()});
    // Seed at the post-activation unit; chain through the unit's own
    // activation derivative.
    dz[unit] = activation_derivative(top.activation, tape.preacts[layer][unit]);
    return backward_to_input(model, tape, layer, std::move(dz));
}

namespace {

struct ParamGrads {
    std::vector<Tensor> dw;
    std::vector<Tensor> db;
};

ParamGrads zero_grads(const MlpModel& model) {
    ParamGrads g;
    for (const Layer& layer : model.layers()) {
        g.dw.push_back(Tensor::zeros(layer.weight.shape));
        g.db.push_back(Tensor::zeros(layer.bias.shape));
    }
    return g;
}

// Softmax cross-entropy loss and dLoss/dlogits, both numerically stabilized.
double softmax_xent(const Tensor& logits, int label, Tensor& dlogits) {
    const size_t k = logits.size();
    double zmax = logits[0];
    for (size_t i = 1; i < k; ++i) {
        zmax = std::max(zmax, logits[i]);
    }
    double denom = 0.0;
    for (size_t i = 0; i < k; ++i) {
        denom += std::exp(logits[i] - zmax);
    }
    const double log_denom = std::log(denom);
    dlogits = Tensor::zeros({k});
    for (size_t i = 0; i < k; ++i) {
        dlogits[i] = std::exp(logits[i] - zmax) / denom;
    }
    dlogits[static_cast<size_t>(label)] -= 1.0;
    return log_denom - (logits[static_cast<size_t>(label)] - zmax);
}

void accumulate_param_grads(const MlpModel& model, const GradTape& tape,
                            Tensor dz_top, ParamGrads& grads) {
    Tensor dz = std::move(dz_top);
    for (size_t l = model.num_layers(); l-- > 0;) {
        const Layer& layer = model.layers()[l];
        const size_t out = layer.out_dim();
        const size_t in = layer.in_dim();
        const Tensor& a_prev = tape.activations[l];
        Tensor& dw = grads.dw[l];
        Tensor& db = grads.db[l];
        for (size_t r = 0; r < out; ++r) {
            const double g = dz[r];
            db[r] += g;
            if (g == 0.0) {
                continue;
            }
            double* dwrow = dw.data.data() + r * in;
            for (size_t c = 0; c < in; ++c) {
                dwrow[c] += g * a_prev[c];
            }
        }
        if (l == 0) {
            break;
        }
        Tensor da_prev = Tensor::zeros({in});
        for (size_t r = 0; r < out; ++r) {
            const double g = dz[r];
            if (g == 0.0) {
                continue;
            }
            const double* wrow = layer.weight.data.data() + r * in;
            for (size_t c = 0; c < in; ++c) {
                da_prev[c] += g * wrow[c];
            }
        }
        const Layer& below = model.layers()[l - 1];
        const Tensor& z_below = tape.preacts[l - 1];
        Tensor dz_below = Tensor::zeros({below.out_dim()});
        for (size_t r = 0; r < below.out_dim(); ++r) {
            dz_below[r] = da_prev[r] * activation_derivative(below.activation, z_below[r]);
        }
        dz = std::move(dz_below);
    }
}

}  // namespace

TrainReport train(MlpModel& model, const Dataset& train_data,
                  const Dataset* test_data, const TrainConfig& config) {
    require(train_data.size() > 0, ErrorKind::invalid_argument, "train: empty dataset");
    require(config.batch_size > 0, ErrorKind::invalid_argument, "train: batch_size must be > 0");
    const size_t k = model.output_dim();
    for (int label : train_data.labels) {
        require(label >= 0 && static_cast<size_t>(label) < k,
                ErrorKind::invalid_argument, "train: label out of range");
    }

    TrainReport report;
    std::vector<size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);

    ParamGrads velocity = zero_grads(model);

    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng = Rng::child(config.seed, stream::train_shuffle, epoch);
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t stop = std::min(order.size(), start + config.batch_size);
            ParamGrads grads = zero_grads(model);
            for (size_t i = start; i < stop; ++i) {
                const size_t idx = order[i];
                GradTape tape = forward_tape(model, train_data.inputs[idx]);
                Tensor dlogits;
                loss_sum += softmax_xent(tape.activations.back(),
                                         train_data.labels[idx], dlogits);
                accumulate_param_grads(model, tape, std::move(dlogits), grads);
            }
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            for (size_t l = 0; l < model.num_layers(); ++l) {
                Layer& layer = model.layers_mut()[l];
                for (size_t i = 0; i < layer.weight.size(); ++i) {
                    const double g = grads.dw[l][i] * inv_batch;
                    velocity.dw[l][i] = config.momentum * velocity.dw[l][i] + g;
                    layer.weight[i] -= config.learning_rate * velocity.dw[l][i];
                }
                for (size_t i = 0; i < layer.bias.size(); ++i) {
                    const double g = grads.db[l][i] * inv_batch;
                    velocity.db[l][i] = config.momentum * velocity.db[l][i] + g;
                    layer.bias[i] -= config.learning_rate * velocity.db[l][i];
                }
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(train_data.size());
        if (!std::isfinite(mean_loss)) {
            raise(ErrorKind::numeric,
                  "train: loss diverged (non-finite) at epoch " + std::to_string(epoch));
        }
        report.train_loss.push_back(mean_loss);
        report.train_accuracy.push_back(accuracy(model, train_data));
        if (test_data != nullptr) {
            report.test_accuracy.push_back(accuracy(model, *test_data));
        }
    }
    return report;
}

MlpModel perturb_weights(const MlpModel& model, double sigma_ng, uint64_t seed,
                         bool include_bias) {
    require(sigma_ng >= 0.0, ErrorKind::invalid_argument,
            "perturb_weights: sigma must be non-negative");
    if (sigma_ng == 0.0) {
        return model;
    }
    Rng rng(seed);
    std::vector<Layer> layers = model.layers();
    for (Layer& layer : layers) {
        for (double& w : layer.weight.data) {
            w *= rng.normal(1.0, sigma_ng);
        }
        if (include_bias) {
            for (double& b : layer.bias.data) {
                b *= rng.normal(1.0, sigma_ng);
            }
        }
    }
    return MlpModel(std::move(layers));
}

size_t predict_class(const MlpModel& model, const Tensor& x) {
    Tensor logits = forward(model, x);
    size_t best = 0;
    for (size_t i = 1; i < logits.size(); ++i) {
        if (logits[i] > logits[best]) {
            best = i;  // strict '>' keeps the lowest index on ties
        }
    }
    return best;
}

double accuracy(const MlpModel& model, const Dataset& data) {
    require(data.size() > 0, ErrorKind::invalid_argument, "accuracy: empty dataset");
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        if (predict_class(model, data.inputs[i]) ==
            static_cast<size_t>(data.labels[i])) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

void write_f64_le(std::ostream& out, double value) {
    const uint64_t bits = std::bit_cast<uint64_t>(value);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) {
        bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::istream& in, const std::string& path, size_t& offset) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    if (in.gcount() != 8) {
        raise(ErrorKind::format,
              path + ": truncated float block at byte " + std::to_string(offset));
    }
    offset += 8;
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<uint64_t>(bytes[i]) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_model(const MlpModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "save_model: cannot open " + path);
    out << "GNLAB-MLP1\n";
    out << "layers " << model.num_layers() << "\n";
    for (size_t l = 0; l < model.num_layers(); ++l) {
        const Layer& layer = model.layers()[l];
        out << "layer " << l << " in " << layer.in_dim() << " out " << layer.out_dim()
            << " act " << activation_name(layer.activation) << "\n";
    }
    out << "data\n";
    for (const Layer& layer : model.layers()) {
        for (double w : layer.weight.data) {
            write_f64_le(out, w);
        }
        for (double b : layer.bias.data) {
            write_f64_le(out, b);
        }
    }
    require(out.good(), ErrorKind::io, "save_model: write failed for " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "load_model: cannot open " + path);
    size_t offset = 0;
    auto read_line = [&](const char* what) {
        std::string line;
        if (!std::getline(in, line)) {
            raise(ErrorKind::format, path + ": truncated header (" + std::string(what) +
                                         ") at byte " + std::to_string(offset));
        }
        offset += line.size() + 1;
        return line;
    };
    if (read_line("magic") != "GNLAB-MLP1") {
        raise(ErrorKind::format, path + ": bad magic at byte 0");
    }
    std::istringstream count_line(read_line("layer count"));
    std::string tag;
    size_t n_layers = 0;
    count_line >> tag >> n_layers;
    if (tag != "layers" || n_layers == 0) {
        raise(ErrorKind::format, path + ": bad layer count line");
    }
    struct Dims {
        size_t in, out;
        Activation act;
    };
    std::vector<Dims> dims;
    for (size_t l = 0; l < n_layers; ++l) {
        std::istringstream ls(read_line("layer header"));
        std::string layer_tag, in_tag, out_tag, act_tag, act_name;
        size_t index = 0, in = 0, out = 0;
        ls >> layer_tag >> index >> in_tag >> in >> out_tag >> out >> act_tag >> act_name;
        if (layer_tag != "layer" || index != l || in_tag != "in" || out_tag != "out" ||
            act_tag != "act" || in == 0 || out == 0) {
            raise(ErrorKind::format,
                  path + ": bad layer header " + std::to_string(l));
        }
        dims.push_back({in, out, activation_from_name(act_name, path)});
    }
    if (read_line("data marker") != "data") {
        raise(ErrorKind::format, path + ": missing data marker");
    }
    std::vector<Layer> layers;
    for (const Dims& d : dims) {
        Layer layer;
        layer.weight = Tensor::zeros({d.out, d.in});
        layer.bias = Tensor::zeros({d.out});
        layer.activation = d.act;
        for (double& w : layer.weight.data) {
            w = read_f64_le(in, path, offset);
        }
        for (double& b : layer.bias.data) {
            b = read_f64_le(in, path, offset);
        }
        layers.push_back(std::move(layer));
    }
    return MlpModel(std::move(layers));
}

}  // namespace gnlab
