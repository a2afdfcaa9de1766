#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mendkit/kdtree.hpp"
#include "mendkit/mesh.hpp"

namespace mendkit {

// Symmetric chamfer discrepancy between two point sets: mean of squared
// nearest-neighbor distances, averaged over both directions.
double chamferPoints(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// Samples n surface points on each mesh with the same seed, then compares.
double chamfer(const TriMesh& a, const TriMesh& b, size_t n, uint64_t seed);

inline bool nonEmpty(const TriMesh& restoration) { return !restoration.triangles.empty(); }

// Fraction of n predicted-surface samples that hug the non-fracture region
// (nearest neighbor < eta) while sitting far from the true restoration
// (nearest neighbor > eta).
double nfre(const TriMesh& pred, const TriMesh& gtRestoration,
            const std::vector<Vec3>& nonfractureSurface, double eta, size_t n, uint64_t seed);
double nfrePoints(const std::vector<Vec3>& predSamples, const std::vector<Vec3>& gtSamples,
                  const std::vector<Vec3>& nonfractureSurface, double eta);

struct EvalRow {
    std::string shape_id;
    std::string shape_class;
    bool non_empty = false;
    double cd = 0.0;    // valid when non_empty
    double nfre = 0.0;  // valid when non_empty
    double eta = 0.0;
    uint64_t n = 0;
    uint64_t seed = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    double ne_percent = 0.0;
    double mean_cd = 0.0;    // class-weighted, non-empty shapes only
    double mean_nfre = 0.0;  // class-weighted, non-empty shapes only
    std::map<std::string, double> class_cd;
    std::map<std::string, double> class_nfre;
    std::string config_hash;

    // Recomputes aggregates from rows (equal class weights).
    void aggregate();
    std::string toJson() const;
    std::string toTable() const;
};

}  // namespace mendkit
