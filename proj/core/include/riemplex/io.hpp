#pragma once

#include "riemplex/calculus.hpp"
#include "riemplex/curvature.hpp"
#include "riemplex/density.hpp"
#include "riemplex/ensemble.hpp"
#include "riemplex/nn.hpp"

#include <json.hpp>

#include <string>

namespace riemplex::io {

using json = nlohmann::json;

// ================================================================
// Ingestion. Parse failures throw validation_error_t with a message
// suitable for the machine-readable error record.
// ================================================================

partition_t parse_partition(const json& doc);
partition_t load_partition(const std::string& path);
json partition_to_json(const partition_t& part);

/// CSV with n feature columns and an optional trailing response column;
/// an optional header line is detected by its non-numeric first field.
dataset_t load_dataset_csv(const std::string& path, int expected_features);

std::vector<layer_spec_t> parse_network(const json& doc);
std::vector<layer_spec_t> load_network(const std::string& path);

// ================================================================
// Report serialization. All emitters iterate canonical orders and the
// JSON dumper uses sorted keys and shortest round-trip floats, so equal
// inputs give byte-identical files.
// ================================================================

json complex_to_json(const simplicial_complex_t& K);
json faces_to_json(const nerve_t& nerve);
json metric_report(const riemannian_structure_t& rs);
json density_to_json(const density_field_t& field);
json graph_to_json(const weighted_graph_t& graph);
json curvature_to_json(const curvature_report_t& report);
std::string curvature_csv(const curvature_report_t& report);
json signature_to_json(const spectral_signature_t& sig);
json sequence_report(const layer_sequence_t& seq);

std::string dump(const json& doc);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

} // namespace riemplex::io
