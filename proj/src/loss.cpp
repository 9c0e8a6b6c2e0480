#include "dvp/loss.hpp"

#include <cmath>

namespace dvp {

namespace {

double builtin(const Frame& output, const Frame& target, DataTermKind kind, Frame* grad) {
    const auto o = output.data();
    const auto t = target.data();
    const double n = static_cast<double>(o.size());
    double sum = 0.0;
    if (kind == DataTermKind::l1) {
        for (std::size_t i = 0; i < o.size(); ++i) {
            const double r = static_cast<double>(o[i]) - t[i];
            sum += std::fabs(r);
            if (grad) grad->data()[i] = static_cast<float>((r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) / n);
        }
    } else {
        for (std::size_t i = 0; i < o.size(); ++i) {
            const double r = static_cast<double>(o[i]) - t[i];
            sum += r * r;
            if (grad) grad->data()[i] = static_cast<float>(2.0 * r / n);
        }
    }
    return sum / n;
}

}  // namespace

double data_term(const Frame& output, const Frame& target, const DataTerm& term) {
    require_same_shape(output, target, "data_term");
    if (term.kind == DataTermKind::hook) {
        if (!term.hook) throw InvalidArgument("data_term: hook kind selected but no hook supplied");
        return term.hook(output, target, nullptr);
    }
    return builtin(output, target, term.kind, nullptr);
}

double data_term_grad(const Frame& output, const Frame& target, const DataTerm& term, Frame& grad) {
    require_same_shape(output, target, "data_term");
    if (!grad.same_shape(output)) grad = Frame(output.height(), output.width(), output.channels());
    if (term.kind == DataTermKind::hook) {
        if (!term.hook) throw InvalidArgument("data_term: hook kind selected but no hook supplied");
        return term.hook(output, target, &grad);
    }
    return builtin(output, target, term.kind, &grad);
}

}  // namespace dvp
