#pragma once

// JSON model files: named spaces, states, maps, kernels, extended kernels,
// embeddings and quantum objects, cross-referenced by name.

#include <filesystem>
#include <map>
#include <string>

#include "json.hpp"

#include "gpf/quantum.hpp"
#include "gpf/trial_sim.hpp"

namespace gpf {

struct StateEntry {
  std::string space;
  InformationState state;
};

struct MapEntry {
  std::string source;
  std::string target;
  MeasurableMap map;
};

struct KernelEntry {
  std::string input;
  std::string outcome;
  Kernel kernel;
};

struct ExtendedEntry {
  std::string input;
  std::string outcome;
  std::string output;
  ExtendedKernel kernel;
};

struct EmbeddingEntry {
  std::string space;
  Embedding embedding;
};

struct PovmEntry {
  std::string outcome;
  POVM povm;
};

struct QeoEntry {
  std::string outcome;
  QuantumExtendedObservable qeo;
};

struct QuantumSection {
  std::optional<std::int64_t> dim;
  std::map<std::string, DensityMatrix> densities;
  std::map<std::string, PovmEntry> povms;
  std::map<std::string, QeoEntry> qeos;
  std::map<std::string, SuperOperator> superoperators;
};

struct ModelFile {
  std::map<std::string, FiniteSpace> spaces;
  std::map<std::string, StateEntry> states;
  std::map<std::string, MapEntry> maps;
  std::map<std::string, KernelEntry> kernels;
  std::map<std::string, ExtendedEntry> extended;
  std::map<std::string, EmbeddingEntry> embeddings;
  QuantumSection quantum;

  // Name lookups; a missing name is a DanglingReference.
  const FiniteSpace& space(const std::string& name) const;
  const StateEntry& state(const std::string& name) const;
  const MapEntry& map(const std::string& name) const;
  const KernelEntry& kernel(const std::string& name) const;
  const ExtendedEntry& extended_kernel(const std::string& name) const;
  const EmbeddingEntry& embedding(const std::string& name) const;
  const DensityMatrix& density(const std::string& name) const;
  const PovmEntry& povm(const std::string& name) const;
  const QeoEntry& qeo(const std::string& name) const;
  const SuperOperator& superoperator(const std::string& name) const;
};

ModelFile parse_model(const nlohmann::json& document);
ModelFile parse_model(std::string_view text);
inline ModelFile parse_model(const std::string& text) { return parse_model(std::string_view(text)); }
inline ModelFile parse_model(const char* text) { return parse_model(std::string_view(text)); }
ModelFile parse_model_file(const std::filesystem::path& path);

nlohmann::json to_json(const ModelFile& model);

// Output helpers shared by the CLI.
nlohmann::json complex_to_json(std::complex<double> z);
nlohmann::json matrix_to_json(const ComplexMatrix<double>& m);
nlohmann::json weights_to_json(const FiniteSpace& space, const Vector<double>& weights);
nlohmann::json to_json(const SimulationReport& report);

// Sorted keys, two-space indentation, floats with 17 significant digits,
// non-finite numbers as null. Equal documents give byte-identical text.
std::string canonical_dump(const nlohmann::json& value);

}  // namespace gpf
