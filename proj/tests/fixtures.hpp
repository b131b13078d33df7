#pragma once

// Shared fixtures: the four-cell axis-aligned tree partition on [0,4]^2 and
// the two-neuron halfspace partition of the unit square. Cell ids follow the
// volume ordering (2, 6, 2, 6) for the tree example.

#include "riemplex/partition.hpp"

#include <random>

namespace riemplex::fixtures {

inline vec_t vv(double x, double y) {
    vec_t v(2);
    v << x, y;
    return v;
}

inline box_t bx(double x0, double x1, double y0, double y1) {
    box_t b;
    b.lo = vv(x0, y0);
    b.hi = vv(x1, y1);
    return b;
}

/// Splits x1 = 2 everywhere, x2 = 1 on the left half, x2 = 3 on the right.
/// id 1: [0,2]x[0,1]  (vol 2)      id 2: [0,2]x[1,4]  (vol 6)
/// id 3: [2,4]x[3,4]  (vol 2)      id 4: [2,4]x[0,3]  (vol 6)
inline partition_t tree_example(double scale = 1.0) {
    domain_t dom;
    dom.bounds = bx(0, 4 * scale, 0, 4 * scale);
    auto cell = [&](index_t id, double x0, double x1, double y0, double y1) {
        partition_cell_t c;
        c.id = id;
        c.geometry.is_box = true;
        c.geometry.box = bx(x0 * scale, x1 * scale, y0 * scale, y1 * scale);
        return c;
    };
    return partition_t(dom, {cell(1, 0, 2, 0, 1), cell(2, 0, 2, 1, 4),
                             cell(3, 2, 4, 3, 4), cell(4, 2, 4, 0, 3)});
}

/// Unit-square partition by the two hyperplanes 2x1 - x2 = 0.5 and
/// -x1 + 2x2 = 0.5. ids: 0 = C00, 1 = C01, 2 = C10, 3 = C11.
inline partition_t two_neuron_example() {
    domain_t dom;
    dom.bounds = bx(0, 1, 0, 1);
    const vec_t g1 = vv(2, -1);
    const vec_t g2 = vv(-1, 2);
    auto cell = [&](index_t id, int a1, int a2) {
        partition_cell_t c;
        c.id = id;
        c.geometry.is_box = false;
        c.geometry.halfspaces.push_back(a1 ? geom::halfspace_t{-g1, -0.5}
                                           : geom::halfspace_t{g1, 0.5});
        c.geometry.halfspaces.push_back(a2 ? geom::halfspace_t{-g2, -0.5}
                                           : geom::halfspace_t{g2, 0.5});
        return c;
    };
    return partition_t(dom, {cell(0, 0, 0), cell(1, 0, 1), cell(2, 1, 0),
                             cell(3, 1, 1)});
}

/// Random axis-aligned partition of [0,1]^2 built by recursive splits, the
/// way a depth-capped tree would carve the square. Always connected.
inline partition_t random_box_partition(std::mt19937_64& gen, int max_splits) {
    std::uniform_real_distribution<double> U(0.3, 0.7);
    std::vector<box_t> boxes = {bx(0, 1, 0, 1)};
    for (int s = 0; s < max_splits; ++s) {
        const std::size_t pick = gen() % boxes.size();
        box_t b = boxes[pick];
        const int axis = static_cast<int>(gen() % 2);
        const double t = b.lo[axis] + U(gen) * (b.hi[axis] - b.lo[axis]);
        box_t left = b, right = b;
        left.hi[axis] = t;
        right.lo[axis] = t;
        boxes[pick] = left;
        boxes.push_back(right);
    }
    domain_t dom;
    dom.bounds = bx(0, 1, 0, 1);
    std::vector<partition_cell_t> cells;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        partition_cell_t c;
        c.id = static_cast<index_t>(i);
        c.geometry.is_box = true;
        c.geometry.box = boxes[i];
        cells.push_back(c);
    }
    return partition_t(dom, std::move(cells));
}

} // namespace riemplex::fixtures
