#ifndef OMICSNET_GRAPH_HPP
#define OMICSNET_GRAPH_HPP

#include "omicsnet/matrix.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace omicsnet {

struct Edge {
    std::size_t i = 0;
    std::size_t j = 0;
    double weight = 0.0;

    bool operator==(const Edge&) const = default;
};

struct GraphMeta {
    std::string method;
    std::vector<std::pair<std::string, std::string>> params;
    /// Nodes left isolated because their measurements were degenerate.
    std::vector<std::size_t> flagged_nodes;
};

struct Neighbor {
    std::size_t node = 0;
    double weight = 0.0;
};

/**
 * @brief Immutable weighted undirected graph over named features.
 *
 * Edges are stored canonically with i < j, sorted by (i, j). Construction
 * rejects self-loops, duplicate pairs and weights that are not finite and > 0.
 */
class FeatureGraph {
public:
    FeatureGraph() = default;
    FeatureGraph(std::vector<std::string> node_names, std::vector<Edge> edges, GraphMeta meta = {});

    std::size_t num_nodes() const { return names_.size(); }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<std::string>& node_names() const { return names_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const GraphMeta& meta() const { return meta_; }

    std::span<const Neighbor> neighbors(std::size_t node) const {
        return {adjacency_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
    }
    double weighted_degree(std::size_t node) const { return degree_[node]; }
    double total_weight() const { return total_weight_; }
    std::optional<std::size_t> node_index(const std::string& name) const;

    const std::optional<Matrix>& node_attrs() const { return attrs_; }
    FeatureGraph with_node_attrs(Matrix attrs) const;

    /// Subgraph induced by `nodes` (kept in the given order).
    FeatureGraph induced(std::span<const std::size_t> nodes) const;

private:
    std::vector<std::string> names_;
    std::vector<Edge> edges_;
    GraphMeta meta_;
    std::optional<Matrix> attrs_;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> adjacency_;
    std::vector<double> degree_;
    double total_weight_ = 0.0;
};

/// Edge list CSV: header "source,target,weight", rows sorted by (i, j).
void write_edge_list(std::ostream& out, const FeatureGraph& g);
/// One node name per line after a "node" header.
void write_node_order(std::ostream& out, const FeatureGraph& g);
std::vector<std::string> read_node_order(std::istream& in);

/**
 * Reads an edge list. With `nodes`, every endpoint must be listed and the node
 * order follows the list; without, nodes are the sorted set of endpoint names.
 * Reverse duplicates with equal weight collapse to one edge.
 */
FeatureGraph read_edge_list(std::istream& in, const std::optional<std::vector<std::string>>& nodes = std::nullopt);

void save_graph(const std::filesystem::path& edge_list, const FeatureGraph& g);
FeatureGraph load_graph(const std::filesystem::path& edge_list,
                        const std::optional<std::filesystem::path>& node_order = std::nullopt);
/// Node-order file path written next to an edge list: "<stem>.nodes.csv".
std::filesystem::path node_order_path(const std::filesystem::path& edge_list);

/// GraphML with edge weights and, when present, node attributes attr0..attrN.
void write_graphml(std::ostream& out, const FeatureGraph& g);

} // namespace omicsnet

#endif
