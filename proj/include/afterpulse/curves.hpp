#pragma once

// Vectorised model curves over a grid of p0 values, for comparison tables.

#include <Eigen/Dense>

#include "afterpulse/models.hpp"

namespace afterpulse {

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> simple_curve(
    const Eigen::ArrayBase<Derived>& p0, typename Derived::Scalar p_s) {
    return p0 * (1 + p_s - p0 * p_s);
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> first_order_curve(
    const Eigen::ArrayBase<Derived>& p0, const ModelParams& params) {
    using Scalar = typename Derived::Scalar;
    params.validate();
    const auto sums = geometric_sums(params.p_ap);
    return p0 * static_cast<Scalar>(sums.s1);
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> second_order_curve(
    const Eigen::ArrayBase<Derived>& p0, const ModelParams& params) {
    using Scalar = typename Derived::Scalar;
    params.validate();
    const auto sums = geometric_sums(params.p_ap);
    return p0 * static_cast<Scalar>(sums.s1) - p0.square() * static_cast<Scalar>(sums.s2);
}

template <typename Derived>
Eigen::Array<typename Derived::Scalar, Eigen::Dynamic, 1> exact_curve(
    const Eigen::ArrayBase<Derived>& p0, const ModelParams& params) {
    using Scalar = typename Derived::Scalar;
    using Column = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    params.validate();
    Column miss = Column::Ones(p0.size());
    Scalar weight = 1;
    for (int i = 0; i <= params.order_max; ++i) {
        miss *= 1 - p0 * weight;
        weight *= static_cast<Scalar>(params.p_ap);
    }
    return 1 - miss;
}

// Columns: p0, simple (p_s = p_ap), first, second, exact.
template <typename Scalar = double>
Eigen::Array<Scalar, Eigen::Dynamic, 5> model_comparison_table(Eigen::Index points,
                                                                const ModelParams& params) {
    using Column = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    Eigen::Array<Scalar, Eigen::Dynamic, 5> table(points, 5);
    const Column p0 = Column::LinSpaced(points, 0, 1);
    table.col(0) = p0;
    table.col(1) = simple_curve(p0, static_cast<Scalar>(params.p_ap));
    table.col(2) = first_order_curve(p0, params);
    table.col(3) = second_order_curve(p0, params);
    table.col(4) = exact_curve(p0, params);
    return table;
}

}  // namespace afterpulse
