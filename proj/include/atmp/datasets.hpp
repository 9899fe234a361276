#pragma once

#include <cstdint>
#include <string>

#include "atmp/models.hpp"
#include "atmp/rng.hpp"

namespace atmp {

struct DatasetSpec {
    enum class Kind { Linreg, Blobs, Moons, Csv };
    Kind kind = Kind::Blobs;
    int n = 256;
    int d = 2;
    int classes = 2;          // classification generators
    double noise = 0.1;       // Gaussian noise scale
    double separation = 3.0;  // blob center distance
    Vec theta_true;           // linreg; drawn at random when empty
    std::string csv_path;
    int csv_classes = 0;  // 0 = regression targets

    void validate() const;
};

struct GeneratedData {
    Dataset data;
    Vec theta_true;  // linreg only
};

// Deterministic per (spec, rng key). Linreg: Gaussian rows, y = x.theta + noise.
// Blobs: class-balanced K blobs; K = 2 uses centers at +-(sep/2)/sqrt(d) * ones
// so the two-class geometry is seed-independent. Moons: the two interleaved
// half-circles, d must be 2. Csv reads the file instead of sampling.
GeneratedData generate_dataset(const DatasetSpec& spec, const Rng& rng);

// Rows x1,...,xd,y with an optional header line; num_classes 0 = regression.
Dataset load_csv_dataset(const std::string& path, int num_classes);

}  // namespace atmp
