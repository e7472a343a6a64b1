#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nnmass {

enum class Activation { linear, relu, elu };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// One cell of d_c layers, each w_c units wide, with at most t_c long-range
// source units feeding any given layer.
struct CellSpec {
  int depth = 0;            // d_c
  int width = 0;            // w_c
  int shortcut_budget = 0;  // t_c

  bool operator==(const CellSpec&) const = default;
};

struct ArchitectureSpec {
  std::vector<CellSpec> cells;
  Activation activation = Activation::relu;
  int input_dim = 1;
  int output_dim = 1;

  bool operator==(const ArchitectureSpec&) const = default;
};

// Throw on violated invariants; silent on success.
void validate(const CellSpec& cell);
void validate(const ArchitectureSpec& spec);

ArchitectureSpec arch_from_json(const nlohmann::json& j);
nlohmann::json arch_to_json(const ArchitectureSpec& spec);

ArchitectureSpec load_arch(const std::string& path);
void save_arch(const ArchitectureSpec& spec, const std::string& path);

// Convenience for the common one-cell case.
ArchitectureSpec single_cell(int depth, int width, int budget,
                             Activation act = Activation::relu,
                             int input_dim = 2, int output_dim = 2);

}  // namespace nnmass
