#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gliomkit/net/network.hpp"

namespace gliomkit::net {

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_tensor;
    std::int64_t worst_index = -1;
    std::int64_t n_checked = 0;
    std::vector<std::pair<std::string, double>> per_tensor;

    bool passed(double tolerance) const { return max_rel_error <= tolerance; }
};

// Central finite differences of the training-mode loss against backprop, over
// every parameter and the input images. Relative error uses
// |a - n| / max(|a| + |n|, 1e-6); the floor absorbs finite-difference noise on
// gradients that are themselves ~0. Intended for double precision and tiny
// specs; cost is two forward passes per scalar.
inline GradCheckReport gradient_check(Network<double>& net, const SampleBatch<double>& batch,
                                      double h = 1e-5) {
    SampleBatch<double> work;
    work.images = batch.images;
    work.coords = batch.coords;
    work.labels = batch.labels;

    net.zero_grads();
    work.images.ensure_grad();
    work.images.zero_grad();
    net.forward_backward(work);

    std::vector<std::pair<std::string, Tensor<double>*>> targets = net.named_parameters();
    targets.emplace_back("input", &work.images);

    GradCheckReport report;
    for (auto& [name, tensor] : targets) {
        const std::vector<double> analytic = tensor->g;
        double tensor_max = 0.0;
        for (std::size_t k = 0; k < tensor->v.size(); ++k) {
            const double saved = tensor->v[k];
            tensor->v[k] = saved + h;
            const double plus = net.loss_only(work);
            tensor->v[k] = saved - h;
            const double minus = net.loss_only(work);
            tensor->v[k] = saved;
            const double numeric = (plus - minus) / (2.0 * h);
            const double a = analytic[k];
            const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6);
            ++report.n_checked;
            tensor_max = std::max(tensor_max, rel);
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_tensor = name;
                report.worst_index = static_cast<std::int64_t>(k);
            }
        }
        report.per_tensor.emplace_back(name, tensor_max);
    }
    return report;
}

} // namespace gliomkit::net
