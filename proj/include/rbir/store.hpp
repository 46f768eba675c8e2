// store.hpp - index persistence: a deterministic, self-describing text
// format carrying the effective config, palette, signatures, clusters and
// edges, closed by a whole-file checksum.

#ifndef RBIR_STORE_HPP
#define RBIR_STORE_HPP

#include <string>
#include <vector>

#include "rbir/config.hpp"
#include "rbir/sgraph.hpp"

namespace rbir {

struct CatalogEntry {
    std::uint32_t id = 0;
    std::string path;
};

struct IndexData {
    Config config; // effective config; theta always resolved
    ColorPalette palette;
    std::vector<CatalogEntry> catalog; // insertion order, parallel to signatures
    SignatureGraph graph;
};

// Serializes the whole index. Byte output is a pure function of the data;
// the graph invariants are checked before anything is written.
void save_index(const IndexData& data, const std::string& path);

// Parses and validates an index file: version, checksum, referential
// integrity and the full graph invariant suite. Performs no EMD
// evaluations.
IndexData load_index(const std::string& path);

} // namespace rbir

#endif // RBIR_STORE_HPP
