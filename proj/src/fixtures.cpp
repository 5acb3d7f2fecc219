#include "colluder/fixtures.hpp"

namespace colluder::fixtures {

namespace {

MissingDataGraph::Builder two_variable_base(int x_levels, int y_levels) {
  MissingDataGraph::Builder b;
  b.vertex("X", VertexRole::TrueVariable, x_levels)
      .vertex("Y", VertexRole::TrueVariable, y_levels)
      .vertex("RX", VertexRole::ResponseIndicator)
      .vertex("RY", VertexRole::ResponseIndicator)
      .pair("X", "RX")
      .pair("Y", "RY")
      .directed("X", "RY")
      .directed("RX", "RY");
  return b;
}

}  // namespace

MissingDataGraph colluder_only(int x_levels, int y_levels) {
  return two_variable_base(x_levels, y_levels).build();
}

MissingDataGraph colluder_with_dependency(int x_levels, int y_levels) {
  return two_variable_base(x_levels, y_levels).directed("X", "Y").build();
}

MissingDataGraph cross_censoring(int x_levels, int y_levels, bool with_xy_edge) {
  auto b = two_variable_base(x_levels, y_levels);
  b.directed("Y", "RX");
  if (with_xy_edge) b.directed("X", "Y");
  return b.build();
}

MissingDataGraph example_graph(char which, int levels) {
  if (which >= 'a' && which <= 'c') {
    auto b = two_variable_base(levels, levels);
    b.directed("X", "Y");
    switch (which) {
      case 'a':
        b.bidirected("X", "Y").bidirected("RX", "RY");
        break;
      case 'b':
        b.bidirected("RX", "RY").bidirected("X", "RY");
        break;
      default:
        b.bidirected("X", "Y").bidirected("X", "RY");
        break;
    }
    return b.build();
  }

  MissingDataGraph::Builder b;
  b.vertex("X", VertexRole::TrueVariable, levels)
      .vertex("Y", VertexRole::TrueVariable, levels)
      .vertex("Z", VertexRole::TrueVariable, levels)
      .vertex("RX", VertexRole::ResponseIndicator)
      .vertex("RY", VertexRole::ResponseIndicator)
      .vertex("RZ", VertexRole::ResponseIndicator)
      .pair("X", "RX")
      .pair("Y", "RY")
      .pair("Z", "RZ");
  switch (which) {
    case 'd':
      b.directed("X", "Y").directed("Y", "Z").directed("X", "RY").directed("Y", "RZ");
      b.directed("RX", "RY").directed("RY", "RZ");
      break;
    case 'e':
      b.directed("X", "Y").directed("Z", "Y").directed("X", "RY").directed("Z", "RY");
      b.directed("RX", "RY").directed("RZ", "RY");
      break;
    case 'f':
      b.directed("X", "Y").directed("X", "Z").directed("X", "RY").directed("X", "RZ");
      b.directed("RX", "RY").directed("RX", "RZ");
      break;
    default:
      throw GraphError(std::string("no example graph '") + which + "'");
  }
  return b.build();
}

}  // namespace colluder::fixtures
