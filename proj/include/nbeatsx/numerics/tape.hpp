#pragma once

#include "nbeatsx/numerics/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nbeatsx {

enum class OpKind {
    leaf,
    constant,
    matmul,
    add,
    sub,
    hadamard,
    concat,
    slice,
    sum,
    mean,
    affine,
    relu,
    lrelu,
    prelu,
    selu,
    softplus,
    sigmoid,
    tanh,
    dropout,
    batch_norm,
    causal_dilated_conv1d,
    gated_unit,
    abs,
    reshape,
};

inline std::string_view to_string(OpKind kind) {
    switch (kind) {
        case OpKind::leaf: return "leaf";
        case OpKind::constant: return "constant";
        case OpKind::matmul: return "matmul";
        case OpKind::add: return "add";
        case OpKind::sub: return "sub";
        case OpKind::hadamard: return "hadamard";
        case OpKind::concat: return "concat";
        case OpKind::slice: return "slice";
        case OpKind::sum: return "sum";
        case OpKind::mean: return "mean";
        case OpKind::affine: return "affine";
        case OpKind::relu: return "relu";
        case OpKind::lrelu: return "lrelu";
        case OpKind::prelu: return "prelu";
        case OpKind::selu: return "selu";
        case OpKind::softplus: return "softplus";
        case OpKind::sigmoid: return "sigmoid";
        case OpKind::tanh: return "tanh";
        case OpKind::dropout: return "dropout";
        case OpKind::batch_norm: return "batch_norm";
        case OpKind::causal_dilated_conv1d: return "causal_dilated_conv1d";
        case OpKind::gated_unit: return "gated_unit";
        case OpKind::abs: return "abs";
        case OpKind::reshape: return "reshape";
    }
    return "?";
}

class Tape;

/// Handle to a node recorded on a tape.
struct Var {
    Tape* tape = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    const Shape& shape() const { return value().shape(); }
};

/// Append-only record of a computation for reverse-mode differentiation.
///
/// Nodes only reference earlier nodes, so insertion order is a topological
/// order and `backward` walks it in reverse exactly once.
class Tape {
public:
    /// Propagates the gradient of a node into its inputs' gradients.
    using BackwardFn = std::function<void(Tape&, std::size_t self)>;

    explicit Tape(bool training = false) : training_(training) {}

    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool training() const noexcept { return training_; }

    /// Trainable leaf registered under `name`.
    Var parameter(const std::string& name, Tensor value) {
        for (std::size_t id : parameter_ids_) {
            if (nodes_[id].name == name) throw ConfigError("tape: parameter '" + name + "' bound twice");
        }
        Node node;
        node.kind = OpKind::leaf;
        node.value = std::move(value);
        node.requires_grad = true;
        node.name = name;
        nodes_.push_back(std::move(node));
        parameter_ids_.push_back(nodes_.size() - 1);
        return Var{this, nodes_.size() - 1};
    }

    /// Non-trainable input.
    Var constant(Tensor value) {
        Node node;
        node.kind = OpKind::constant;
        node.value = std::move(value);
        nodes_.push_back(std::move(node));
        return Var{this, nodes_.size() - 1};
    }

    Var record(OpKind kind, std::vector<std::size_t> inputs, Tensor value, BackwardFn backward) {
        Node node;
        node.kind = kind;
        for (std::size_t in : inputs) {
            if (in >= nodes_.size()) throw Error("tape: input references a future node");
            node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
        }
        node.inputs = std::move(inputs);
        node.value = std::move(value);
        if (node.requires_grad) node.backward = std::move(backward);
        nodes_.push_back(std::move(node));
        return Var{this, nodes_.size() - 1};
    }

    const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
    OpKind kind(std::size_t id) const { return nodes_.at(id).kind; }
    const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_.at(id).inputs; }
    bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient buffer of a node, allocated as zeros on first access.
    Tensor& grad(std::size_t id) {
        Node& node = nodes_[id];
        if (!node.grad) node.grad.emplace(node.value.shape());
        return *node.grad;
    }

    bool has_grad(std::size_t id) const { return nodes_[id].grad.has_value(); }

    /// Reverse pass from a scalar node. Returns one gradient per registered
    /// parameter, in registration order; unreachable parameters get zeros.
    ParameterSet backward(Var loss) {
        if (loss.tape != this) throw Error("backward: loss belongs to another tape");
        if (value(loss.id).size() != 1) {
            throw ShapeError("backward: loss must be scalar, got shape " +
                             shape_to_string(value(loss.id).shape()));
        }
        for (auto& node : nodes_) node.grad.reset();
        grad(loss.id)[0] = 1.0;
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& node = nodes_[i];
            if (!node.grad || !node.backward) continue;
            node.backward(*this, i);
        }
        ParameterSet grads;
        for (std::size_t id : parameter_ids_) {
            const Node& node = nodes_[id];
            grads.add(node.name, node.grad ? *node.grad : Tensor(node.value.shape()));
        }
        return grads;
    }

private:
    struct Node {
        OpKind kind = OpKind::constant;
        std::vector<std::size_t> inputs;
        Tensor value;
        std::optional<Tensor> grad;
        BackwardFn backward;
        bool requires_grad = false;
        std::string name;
    };

    std::vector<Node> nodes_;
    std::vector<std::size_t> parameter_ids_;
    bool training_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

}  // namespace nbeatsx
