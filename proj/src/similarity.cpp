#include "pmsfm/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmsfm {

Descriptor covisibility_descriptor(int image_id,
                                   const std::vector<std::uint64_t>& observed,
                                   int bucket_count) {
  int dim = bucket_count;
  if (dim <= 0) {
    std::uint64_t max_id = 0;
    for (std::uint64_t id : observed) {
      max_id = std::max(max_id, id);
    }
    dim = static_cast<int>(max_id) + 1;
  }
  Descriptor d;
  d.image_id = image_id;
  d.vector = Eigen::VectorXd::Zero(dim);
  for (std::uint64_t id : observed) {
    d.vector[static_cast<int>(id % static_cast<std::uint64_t>(dim))] = 1.0;
  }
  const double norm = d.vector.norm();
  if (norm > 0.0) {
    d.vector /= norm;
  }
  return d;
}

std::vector<Descriptor> covisibility_descriptors(const SyntheticScene& scene,
                                                 int bucket_count) {
  const int dim = bucket_count > 0
                      ? bucket_count
                      : static_cast<int>(scene.surface_points.size());
  std::vector<Descriptor> out;
  out.reserve(scene.gt_poses.size());
  for (int i = 0; i < static_cast<int>(scene.gt_poses.size()); ++i) {
    std::vector<std::uint64_t> observed;
    const Pose& pose = scene.gt_poses[i];
    const Intrinsics& k = scene.intrinsics[i];
    for (int p = 0; p < static_cast<int>(scene.surface_points.size()); ++p) {
      const auto px = project(k, pose, scene.surface_points[p]);
      if (!px) {
        continue;
      }
      if (px->x() < -0.5 || px->x() > k.width - 0.5 || px->y() < -0.5 ||
          px->y() > k.height - 0.5) {
        continue;
      }
      observed.push_back(static_cast<std::uint64_t>(p));
    }
    out.push_back(covisibility_descriptor(i, observed, dim));
  }
  return out;
}

double similarity(const Descriptor& a, const Descriptor& b) {
  if (a.vector.size() != b.vector.size()) {
    throw std::invalid_argument("similarity: descriptor dimensions differ");
  }
  const double cos = a.vector.dot(b.vector);
  return std::clamp(cos, 0.0, 1.0);
}

SimilarityGraph build_graph(const std::vector<Descriptor>& descriptors,
                            double s_sim) {
  if (descriptors.size() < 2) {
    throw std::invalid_argument("build_graph: need at least 2 descriptors");
  }
  SimilarityGraph g;
  g.threshold = s_sim;
  for (const Descriptor& d : descriptors) {
    g.nodes.push_back(d.image_id);
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  for (std::size_t i = 0; i < descriptors.size(); ++i) {
    for (std::size_t j = i + 1; j < descriptors.size(); ++j) {
      const double w = similarity(descriptors[i], descriptors[j]);
      if (w < s_sim) {
        continue;
      }
      GraphEdge e;
      e.a = std::min(descriptors[i].image_id, descriptors[j].image_id);
      e.b = std::max(descriptors[i].image_id, descriptors[j].image_id);
      e.weight = w;
      g.edges.push_back(e);
      g.adjacency[e.a].emplace_back(e.b, w);
      g.adjacency[e.b].emplace_back(e.a, w);
    }
  }
  for (auto& [node, neighbors] : g.adjacency) {
    std::sort(neighbors.begin(), neighbors.end());
  }
  return g;
}

int select_seed(const SimilarityGraph& graph) {
  if (graph.nodes.empty()) {
    throw std::invalid_argument("select_seed: empty graph");
  }
  if (graph.edges.empty()) {
    throw std::runtime_error(
        "select_seed: similarity graph has no edges; lower s_sim (threshold " +
        std::to_string(graph.threshold) + ") and rebuild");
  }
  int best = -1;
  int best_degree = -1;
  for (int node : graph.nodes) {
    const int deg = graph.degree(node);
    if (deg > best_degree || (deg == best_degree && node < best)) {
      best = node;
      best_degree = deg;
    }
  }
  return best;
}

std::optional<int> select_reference(const SimilarityGraph& graph,
                                    const std::set<int>& registered,
                                    const std::set<int>& unregistered) {
  if (registered.empty()) {
    throw std::invalid_argument("select_reference: registered set is empty");
  }
  int best = -1;
  int best_count = 0;
  for (int node : registered) {
    auto it = graph.adjacency.find(node);
    if (it == graph.adjacency.end()) {
      continue;
    }
    int count = 0;
    for (const auto& [neighbor, weight] : it->second) {
      count += unregistered.count(neighbor) > 0 ? 1 : 0;
    }
    if (count > best_count || (count == best_count && count > 0 && node < best)) {
      best = node;
      best_count = count;
    }
  }
  if (best_count == 0) {
    return std::nullopt;
  }
  return best;
}

void save_descriptors(const std::string& path,
                      const std::vector<Descriptor>& descriptors) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("save_descriptors: cannot open " + path);
  }
  out.precision(17);
  for (const Descriptor& d : descriptors) {
    out << d.image_id;
    for (Eigen::Index i = 0; i < d.vector.size(); ++i) {
      out << ' ' << d.vector[i];
    }
    out << '\n';
  }
}

std::vector<Descriptor> load_descriptors(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_descriptors: cannot open " + path);
  }
  std::vector<Descriptor> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) {
      continue;
    }
    std::istringstream ss(line);
    Descriptor d;
    if (!(ss >> d.image_id)) {
      throw std::runtime_error("load_descriptors: bad line in " + path);
    }
    std::vector<double> values;
    double v = 0.0;
    while (ss >> v) {
      values.push_back(v);
    }
    d.vector = Eigen::Map<Eigen::VectorXd>(values.data(),
                                           static_cast<Eigen::Index>(values.size()));
    const double norm = d.vector.norm();
    if (norm > 0.0) {
      d.vector /= norm;
    }
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace pmsfm
