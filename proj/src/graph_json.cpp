// SPDX-License-Identifier: Apache-2.0

#include "topocl/graph_json.h"

#include "topocl/elements.h"
#include "topocl/error.h"

namespace topocl {

namespace {

int requireInt(const nlohmann::json& object, const char* key, const std::string& path) {
  const auto it = object.find(key);
  if (it == object.end()) {
    throw SchemaError(path + "/" + key, "missing required field");
  }
  if (!it->is_number_integer()) {
    throw SchemaError(path + "/" + key, "expected an integer");
  }
  return it->get<int>();
}

void rejectUnknownKeys(const nlohmann::json& object, std::initializer_list<std::string_view> allowed,
                       const std::string& path) {
  for (const auto& item : object.items()) {
    bool known = false;
    for (std::string_view key : allowed) {
      known = known || item.key() == key;
    }
    if (!known) {
      throw SchemaError(path + "/" + item.key(), "unknown field");
    }
  }
}

}  // namespace

MolGraph graphFromJson(const nlohmann::json& object, const std::string& path) {
  if (!object.is_object()) {
    throw SchemaError(path.empty() ? "/" : path, "expected an object");
  }
  rejectUnknownKeys(object, {"name", "nodes", "edges"}, path);
  MolGraph graph;
  if (const auto it = object.find("name"); it != object.end()) {
    if (!it->is_string()) {
      throw SchemaError(path + "/name", "expected a string");
    }
    graph.setName(it->get<std::string>());
  }
  const auto nodes = object.find("nodes");
  if (nodes == object.end() || !nodes->is_array()) {
    throw SchemaError(path + "/nodes", "expected an array");
  }
  if (nodes->empty()) {
    throw SchemaError(path + "/nodes", "graph must have at least one node");
  }
  for (std::size_t i = 0; i < nodes->size(); ++i) {
    const std::string nodePath = path + "/nodes/" + std::to_string(i);
    const auto&       node     = (*nodes)[i];
    if (!node.is_object()) {
      throw SchemaError(nodePath, "expected an object");
    }
    rejectUnknownKeys(node, {"z"}, nodePath);
    const int z = requireInt(node, "z", nodePath);
    if (z < 1 || z > kMaxAtomicNumber) {
      throw SchemaError(nodePath + "/z", "atomic number outside [1, 118]");
    }
    graph.addAtom(z);
  }
  const auto edges = object.find("edges");
  if (edges == object.end() || !edges->is_array()) {
    throw SchemaError(path + "/edges", "expected an array");
  }
  for (std::size_t i = 0; i < edges->size(); ++i) {
    const std::string edgePath = path + "/edges/" + std::to_string(i);
    const auto&       edge     = (*edges)[i];
    if (!edge.is_object()) {
      throw SchemaError(edgePath, "expected an object");
    }
    rejectUnknownKeys(edge, {"u", "v", "t"}, edgePath);
    const int u = requireInt(edge, "u", edgePath);
    const int v = requireInt(edge, "v", edgePath);
    if (u < 0 || u >= graph.numAtoms()) throw SchemaError(edgePath + "/u", "node index out of range");
    if (v < 0 || v >= graph.numAtoms()) throw SchemaError(edgePath + "/v", "node index out of range");
    if (u == v) throw SchemaError(edgePath, "self-loop");
    if (graph.hasBond(u, v)) throw SchemaError(edgePath, "duplicate edge");
    BondType type = BondType::Single;
    if (const auto t = edge.find("t"); t != edge.end()) {
      if (!t->is_string()) throw SchemaError(edgePath + "/t", "expected a bond type string");
      const auto parsed = bondTypeFromName(t->get<std::string>());
      if (!parsed) throw SchemaError(edgePath + "/t", "unknown bond type '" + t->get<std::string>() + "'");
      type = *parsed;
    }
    graph.addBond(u, v, type);
  }
  return graph;
}

nlohmann::json graphToJson(const MolGraph& graph) {
  nlohmann::json out;
  if (graph.name()) {
    out["name"] = *graph.name();
  }
  nlohmann::json nodes = nlohmann::json::array();
  for (const Atom& a : graph.atoms()) {
    nodes.push_back({{"z", a.atomicNumber}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const Bond& b : graph.bonds()) {
    edges.push_back({{"u", b.u}, {"v", b.v}, {"t", std::string(bondTypeName(b.type))}});
  }
  out["nodes"] = std::move(nodes);
  out["edges"] = std::move(edges);
  return out;
}

MolGraph readGraphJson(std::string_view bytes) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("/", std::string("invalid JSON: ") + e.what());
  }
  return graphFromJson(doc);
}

std::string writeGraphJson(const MolGraph& graph) {
  return graphToJson(graph).dump();
}

}  // namespace topocl
