#pragma once

#include <functional>

#include "dvp/video.hpp"

namespace dvp {

enum class DataTermKind { l1, l2, hook };

/// User-supplied differentiable distance. Must return the loss and, when
/// `grad` is non-null, fill it with d(loss)/d(output).
using DataTermHook = std::function<double(const Frame& output, const Frame& target, Frame* grad)>;

struct DataTerm {
    DataTermKind kind = DataTermKind::l1;
    DataTermHook hook;

    static DataTerm l1() { return {DataTermKind::l1, {}}; }
    static DataTerm l2() { return {DataTermKind::l2, {}}; }
    static DataTerm custom(DataTermHook h) { return {DataTermKind::hook, std::move(h)}; }
};

/// L1: mean |o - t|; L2: mean (o - t)^2; hook: whatever the hook computes.
double data_term(const Frame& output, const Frame& target, const DataTerm& term);

/// Same value as data_term, plus d(loss)/d(output) written to `grad` (resized
/// to the output's shape). The L1 subgradient at zero residual is 0.
double data_term_grad(const Frame& output, const Frame& target, const DataTerm& term, Frame& grad);

}  // namespace dvp
