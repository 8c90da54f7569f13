#pragma once

#include "pmsfm/provider.hpp"

#include <Eigen/Core>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pmsfm {

struct Descriptor {
  int image_id = -1;
  Eigen::VectorXd vector;  // L2-normalized
};

// Indicator vector over observed surface-point buckets, L2-normalized, so
// the cosine of two descriptors approximates the co-visibility overlap
// |A n B| / sqrt(|A| |B|). bucket_count <= 0 keeps one bucket per id.
Descriptor covisibility_descriptor(int image_id,
                                   const std::vector<std::uint64_t>& observed,
                                   int bucket_count = 0);

// Ground-truth co-visibility descriptors for every image of the scene.
std::vector<Descriptor> covisibility_descriptors(const SyntheticScene& scene,
                                                 int bucket_count = 0);

// Cosine similarity clamped to [0, 1].
double similarity(const Descriptor& a, const Descriptor& b);

struct GraphEdge {
  int a = -1;
  int b = -1;
  double weight = 0.0;
};

struct SimilarityGraph {
  std::vector<int> nodes;
  std::vector<GraphEdge> edges;  // stored with a < b
  double threshold = 0.0;
  std::map<int, std::vector<std::pair<int, double>>> adjacency;

  int degree(int node) const {
    auto it = adjacency.find(node);
    return it == adjacency.end() ? 0 : static_cast<int>(it->second.size());
  }
};

// Complete graph on pairwise similarities with edges below s_sim removed.
SimilarityGraph build_graph(const std::vector<Descriptor>& descriptors,
                            double s_sim);

// Maximum-degree node, ties broken by smallest id. Throws when the graph has
// no edges (the caller should retry with a lower s_sim).
int select_seed(const SimilarityGraph& graph);

// Registered node with the most edges into the unregistered set, ties by
// smallest id. Empty when no registered node reaches the frontier.
std::optional<int> select_reference(const SimilarityGraph& graph,
                                    const std::set<int>& registered,
                                    const std::set<int>& unregistered);

// Text format: one line per image, `image_id v1 v2 ... vD`. Vectors are
// L2-normalized on load.
void save_descriptors(const std::string& path,
                      const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> load_descriptors(const std::string& path);

}  // namespace pmsfm
