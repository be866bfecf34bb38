#include "kexp/objectives.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "kexp/errors.hpp"

namespace kexp {

namespace {

void check_shapes(std::span<const double> c, std::span<const double> d) {
    if (c.size() != d.size()) {
        throw InputError(fmt::format("complexities ({}) and occupancy ({}) differ in length",
                                     c.size(), d.size()));
    }
}

void check_positive(double c, double d, std::size_t pair) {
    if (c > 0.0 && !(d > 0.0)) {
        throw DomainError(fmt::format("occupancy {} at pair {} with complexity {}", d, pair, c));
    }
}

}  // namespace

void ObjectiveSpec::validate() const {
    if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw InputError("kappa must be finite and >= 1");
    for (double c : complexities) {
        if (!std::isfinite(c) || c < 0.0) throw InputError("complexities must be finite and >= 0");
    }
}

double u_kappa(std::span<const double> d, const ObjectiveSpec& spec) {
    spec.validate();
    check_shapes(spec.complexities, d);
    const double kappa = spec.kappa;
    double total = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double c = spec.complexities[i];
        if (c == 0.0) continue;
        check_positive(c, d[i], i);
        if (kappa == 1.0) {
            total += c * std::log(d[i]);
        } else {
            total += std::pow(c, kappa) / (1.0 - kappa) * std::pow(d[i], 1.0 - kappa);
        }
    }
    return total;
}

std::vector<double> grad_u_kappa(std::span<const double> d, const ObjectiveSpec& spec) {
    spec.validate();
    check_shapes(spec.complexities, d);
    std::vector<double> grad(d.size(), 0.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double c = spec.complexities[i];
        if (c == 0.0) continue;
        check_positive(c, d[i], i);
        grad[i] = std::pow(c / d[i], spec.kappa);
    }
    return grad;
}

double v_avg(std::span<const double> c, std::span<const double> d) {
    check_shapes(c, d);
    if (c.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0.0) continue;
        check_positive(c[i], d[i], i);
        total += c[i] / d[i];
    }
    return -total / static_cast<double>(c.size());
}

double v_worst(std::span<const double> c, std::span<const double> d) {
    check_shapes(c, d);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i] == 0.0) continue;
        check_positive(c[i], d[i], i);
        worst = std::max(worst, c[i] / d[i]);
    }
    return -worst;
}

double smoothness_constant(double c_max, double kappa, double eta) {
    if (!(eta > 0.0)) throw InputError(fmt::format("eta = {} must be positive", eta));
    if (!(kappa >= 1.0)) throw InputError("kappa must be at least 1");
    return kappa * std::pow(c_max, kappa) / (std::pow(2.0, kappa + 1.0) * std::pow(eta, kappa + 1.0));
}

}  // namespace kexp
