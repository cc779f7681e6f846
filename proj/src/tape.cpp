// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#include "splatstyle/tape.hpp"

#include "splatstyle/errors.hpp"

namespace splatstyle::ad {

const Grid& Var::value() const { return tape_->node(id_).value; }

Grid Var::grad() const {
    const auto& n = tape_->node(id_);
    if (n.grad.empty() && !n.value.empty()) {
        return Grid(n.value.shape());
    }
    return n.grad;
}

bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::leaf(Grid value, bool requires_grad) {
    Node n;
    n.op = "leaf";
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(std::string op, Grid value, const std::vector<Var>& inputs, BackwardFn backward) {
    Node n;
    n.op = std::move(op);
    n.value = std::move(value);
    for (const Var& in : inputs) {
        if (in.tape_ != this) {
            throw Error("op '" + n.op + "' mixes variables from different tapes");
        }
        n.inputs.push_back(in.id_);
        n.requires_grad = n.requires_grad || node(in.id_).requires_grad;
    }
    if (n.requires_grad) {
        n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Grid& Tape::grad_buffer(Var v) {
    Node& n = node(v.id_);
    if (n.grad.empty()) {
        n.grad = Grid(n.value.shape());
    }
    return n.grad;
}

void Tape::accumulate(Var v, const Grid& g) {
    if (!node(v.id_).requires_grad) {
        return;
    }
    Grid& buf = grad_buffer(v);
    require_same_shape(buf, g, "gradient accumulate");
    auto dst = buf.values();
    auto src = g.values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

void Tape::backward(Var root) {
    if (root.tape_ != this) {
        throw Error("backward root belongs to another tape");
    }
    if (root.value().size() != 1) {
        throw ShapeError("backward root must be a scalar, got " + root.value().shape().str());
    }
    if (!node(root.id_).requires_grad) {
        return;
    }
    grad_buffer(root)[0] += 1.0f;
    for (int id = root.id_; id >= 0; --id) {
        Node& n = node(id);
        if (!n.requires_grad || !n.backward || n.grad.empty()) {
            continue;
        }
        n.backward(n.grad);
    }
}

} // namespace splatstyle::ad
