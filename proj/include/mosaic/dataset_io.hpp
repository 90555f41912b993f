#ifndef MOSAIC_DATASET_IO_HPP
#define MOSAIC_DATASET_IO_HPP

#include <string>
#include <utility>
#include <vector>

#include "mosaic/types.hpp"

namespace mosaic {

// Column mapping into a headered CSV file.
struct CsvSchema {
  std::string x = "x";
  std::string y = "y";
  std::string z = "z";
  std::vector<std::string> covariates;  // at least one column
};

// Reads a UTF-8 comma-separated file with a header row. Any row with a
// non-finite or unparsable field is an error, not a silent drop.
SpatialDataset load_dataset(const std::string& path, const CsvSchema& schema,
                            Family family);

void write_dataset_csv(const std::string& path, const SpatialDataset& data,
                       const CsvSchema& schema);

// Disjoint uniform-random split; train gets ceil(n*(1-fraction)) rows.
std::pair<SpatialDataset, SpatialDataset> split_holdout(const SpatialDataset& data,
                                                        double fraction,
                                                        std::uint64_t seed);

// Index form of the same split, for callers that need row provenance.
std::pair<std::vector<int>, std::vector<int>> split_holdout_indices(
    Eigen::Index n, double fraction, std::uint64_t seed);

}  // namespace mosaic

#endif
