#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diqnn/matrix.hpp"

namespace diqnn {

/// Labeled feature matrix; features are row-per-sample.
struct Dataset {
    Matrix features;          // N x d
    std::vector<int> labels;  // N entries in [0, num_classes)
    int num_classes = 0;
    std::string name;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }
    std::span<const double> sample(std::size_t n) const { return features.row(n); }

    /// Validates the invariants (finite features, labels < k, N >= 1).
    void validate() const;
    /// Content hash over features and labels (FNV-1a 64).
    std::uint64_t fingerprint() const;
    /// New dataset holding rows `indices` in the given order.
    Dataset subset(const std::vector<std::size_t>& indices, const std::string& suffix) const;
};

struct SplitSpec {
    double test_fraction = 0.2; // in (0,1)
    std::uint64_t seed = 0;
};

/// Reads the big-endian IDX pair used by MNIST. Pixels are scaled to [0,1]
/// by dividing by 255 and images are flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// Parses a delimited table; the label column may hold class names (mapped
/// to indices by first appearance) or integer labels.
Dataset load_delimited(const std::string& path, std::size_t label_column,
                       char delimiter = ',');

/// The four-point XOR problem: x1=(1,1), x2=(1,-1), x3=(-1,1), x4=(-1,-1)
/// with {x1,x4} in class 0 and {x2,x3} in class 1.
Dataset make_xor();

/// Deterministic partition into train/test; every sample lands in exactly
/// one side.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

} // namespace diqnn
