// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "topocl/mol_graph.h"

namespace topocl {

//! Graph object schema: `{"name"?: string, "nodes": [{"z": int}], "edges": [{"u": int, "v": int, "t": bond}]}`
//! with bond one of single/double/triple/aromatic. Violations raise SchemaError carrying a JSON
//! pointer below `path`.
MolGraph       graphFromJson(const nlohmann::json& object, const std::string& path = "");
nlohmann::json graphToJson(const MolGraph& graph);

MolGraph    readGraphJson(std::string_view bytes);
std::string writeGraphJson(const MolGraph& graph);

}  // namespace topocl
