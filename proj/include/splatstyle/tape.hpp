// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include "splatstyle/grid.hpp"

#include <deque>
#include <functional>
#include <string>
#include <vector>

namespace splatstyle::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while its Tape lives.
class Var {
public:
    Var() = default;

    [[nodiscard]] const Grid& value() const;
    /// Accumulated gradient after Tape::backward. A zero grid when nothing flowed here.
    [[nodiscard]] Grid grad() const;
    [[nodiscard]] const Shape3& shape() const { return value().shape(); }
    [[nodiscard]] bool requires_grad() const;
    [[nodiscard]] Tape& tape() const { return *tape_; }
    [[nodiscard]] int id() const { return id_; }
    [[nodiscard]] bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    int id_ = -1;
};

/// Reverse-mode recording of one forward pass. Nodes are appended in evaluation order, so the
/// reverse of insertion order is a valid topological order for backward. A tape is built per
/// forward pass and thrown away afterwards.
class Tape {
public:
    /// Receives the gradient flowing into the node's output; pushes contributions into inputs
    /// through Tape::accumulate.
    using BackwardFn = std::function<void(const Grid& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var leaf(Grid value, bool requires_grad = true);
    Var constant(Grid value) { return leaf(std::move(value), false); }

    /// Appends an op result. The backward closure is dropped when no input requires a gradient.
    Var record(std::string op, Grid value, const std::vector<Var>& inputs, BackwardFn backward);

    /// Seeds d(root)/d(root) = 1 and propagates to every node that requires a gradient.
    /// Gradients accumulate, so a node feeding several consumers receives the sum.
    void backward(Var root);

    /// Adds g into the gradient buffer of v (no-op when v does not require a gradient).
    void accumulate(Var v, const Grid& g);
    /// Mutable gradient buffer of v, zero-initialized on first access.
    Grid& grad_buffer(Var v);

    [[nodiscard]] std::size_t size() const { return nodes_.size(); }

private:
    friend class Var;

    struct Node {
        std::string op;
        Grid value;
        Grid grad;
        bool requires_grad = false;
        std::vector<int> inputs;
        BackwardFn backward;
    };

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    std::deque<Node> nodes_;
};

} // namespace splatstyle::ad
