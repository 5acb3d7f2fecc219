#pragma once

#include "colluder/graph.hpp"

namespace colluder::fixtures {

/// Colluder X -> R_Y <- R_X without the X -> Y edge.
MissingDataGraph colluder_only(int x_levels = 2, int y_levels = 2);

/// Colluder X -> R_Y <- R_X plus X -> Y; the CCM(m, q) workhorse.
MissingDataGraph colluder_with_dependency(int x_levels = 2, int y_levels = 2);

/// Cross-censoring variant: colluder plus Y -> R_X, optionally X -> Y.
MissingDataGraph cross_censoring(int x_levels = 2, int y_levels = 2, bool with_xy_edge = true);

/// The six example graphs a-f, with every true variable at `levels` levels.
/// Vertices are named X, Y, Z (true variables) and RX, RY, RZ (indicators).
MissingDataGraph example_graph(char which, int levels = 2);

}  // namespace colluder::fixtures
