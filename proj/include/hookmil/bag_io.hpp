#pragma once

#include <string>
#include <vector>

#include "hookmil/matrix.hpp"

namespace hookmil {

// One bag of instance features plus its labeling. The feature file stores
// only the matrix; label and bag_id travel in the manifest.
struct BagFeatures {
    Matrix features;  // N x D
    int label = 0;
    std::string bag_id;
};

// --- bag files --------------------------------------------------------------
//
// Binary, little-endian on every platform:
//   "HKB1" | version u16 = 1 | reserved u16 = 0 | N u64 | D u64
//   followed by N*D float32 values, row-major.
//
// Values are stored at float32 precision; readers upcast to double. A
// round-trip is bit-exact whenever the in-memory values are float32
// representable, which everything this project writes is.

// Fails with distinct messages for bad magic, unsupported version, shape
// overflow, and truncated payload. label/bag_id are left default.
BagFeatures read_bag(const std::string& path);

// Creates parent directories as needed.
void write_bag(const std::string& path, const Matrix& features);

// --- manifests ---------------------------------------------------------------
//
// UTF-8 text, one record per line: bag_path \t label \t bag_id.
// Lines starting with '#' and blank lines are ignored.

struct ManifestEntry {
    std::string bag_path;
    int label = 0;
    std::string bag_id;
};

// Malformed lines and labels outside [0, num_classes) fail with the line
// number. Bag files are not touched here; a missing file surfaces later in
// load_dataset.
std::vector<ManifestEntry> read_manifest(const std::string& path,
                                         int num_classes);

void write_manifest(const std::string& path,
                    const std::vector<ManifestEntry>& entries);

// Reads the manifest and every bag it names, in listed order. Relative bag
// paths resolve against the manifest's directory. Empty or non-finite bags
// are rejected by path.
std::vector<BagFeatures> load_dataset(const std::string& manifest_path,
                                      int num_classes);

}  // namespace hookmil
