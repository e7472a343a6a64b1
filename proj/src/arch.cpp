#include "nnmass/arch.hpp"

#include <fstream>

#include "nnmass/error.hpp"

namespace nnmass {

Activation activation_from_string(const std::string& name) {
  if (name == "linear") return Activation::linear;
  if (name == "relu") return Activation::relu;
  if (name == "elu") return Activation::elu;
  throw FormatError("unknown activation \"" + name + "\"", "expected linear|relu|elu");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
  }
  throw RangeError("invalid activation value");
}

void validate(const CellSpec& cell) {
  if (cell.depth < 1) throw RangeError("cell depth must be positive");
  if (cell.width < 1) throw RangeError("cell width must be positive");
  if (cell.shortcut_budget < 0) throw RangeError("shortcut budget must be non-negative");
  if (cell.shortcut_budget > 0 && cell.depth < 3)
    throw DegenerateCellError("cell with shortcuts needs depth >= 3",
                              "depth " + std::to_string(cell.depth));
}

void validate(const ArchitectureSpec& spec) {
  if (spec.cells.empty()) throw RangeError("architecture needs at least one cell");
  for (const CellSpec& cell : spec.cells) validate(cell);
  if (spec.input_dim < 1) throw RangeError("input_dim must be positive");
  if (spec.output_dim < 1) throw RangeError("output_dim must be positive");
}

namespace {

int require_int(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer())
    throw FormatError(std::string("architecture JSON: missing integer \"") + key + "\"");
  return j[key].get<int>();
}

}  // namespace

ArchitectureSpec arch_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("cells") || !j["cells"].is_array())
    throw FormatError("architecture JSON: expected object with a \"cells\" array");
  ArchitectureSpec spec;
  for (const auto& cj : j["cells"]) {
    CellSpec cell;
    cell.depth = require_int(cj, "depth");
    cell.width = require_int(cj, "width");
    cell.shortcut_budget = require_int(cj, "shortcut_budget");
    spec.cells.push_back(cell);
  }
  if (!j.contains("activation") || !j["activation"].is_string())
    throw FormatError("architecture JSON: missing string \"activation\"");
  spec.activation = activation_from_string(j["activation"].get<std::string>());
  spec.input_dim = require_int(j, "input_dim");
  spec.output_dim = require_int(j, "output_dim");
  validate(spec);
  return spec;
}

nlohmann::json arch_to_json(const ArchitectureSpec& spec) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSpec& cell : spec.cells) {
    cells.push_back({{"depth", cell.depth},
                     {"width", cell.width},
                     {"shortcut_budget", cell.shortcut_budget}});
  }
  return {{"cells", cells},
          {"activation", to_string(spec.activation)},
          {"input_dim", spec.input_dim},
          {"output_dim", spec.output_dim}};
}

ArchitectureSpec load_arch(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open architecture file", path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("architecture JSON parse failure: ") + e.what(), path);
  }
  return arch_from_json(j);
}

void save_arch(const ArchitectureSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write architecture file", path);
  out << arch_to_json(spec).dump(2) << "\n";
}

ArchitectureSpec single_cell(int depth, int width, int budget, Activation act,
                             int input_dim, int output_dim) {
  ArchitectureSpec spec;
  spec.cells.push_back({depth, width, budget});
  spec.activation = act;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  validate(spec);
  return spec;
}

}  // namespace nnmass
