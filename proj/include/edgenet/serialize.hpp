#pragma once

#include <string>

#include "edgenet/graph.hpp"

namespace edgenet {

// Model container: 8-byte magic "EDGENETM", u32 little-endian header length,
// UTF-8 JSON header (topology, attrs, quantization parameters, blob offsets,
// crc32 of the blob), then the little-endian weight blob. Full layout in
// docs/model-format.md. Deterministic: the same graph serializes to the same
// bytes.
inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const Graph& g);
Graph deserialize_model(const std::string& bytes);

void save_model(const Graph& g, const std::string& path);
Graph load_model(const std::string& path);

// Bitwise structural equality via the serialized form.
bool graphs_equal(const Graph& a, const Graph& b);

}  // namespace edgenet
