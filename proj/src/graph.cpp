#include "omicsnet/graph.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace omicsnet {

FeatureGraph::FeatureGraph(std::vector<std::string> node_names, std::vector<Edge> edges, GraphMeta meta)
    : names_(std::move(node_names)), edges_(std::move(edges)), meta_(std::move(meta)) {
    {
        std::unordered_set<std::string> seen;
        for (const auto& n : names_) {
            if (!seen.insert(n).second) {
                throw DataError("graph: duplicate node name '" + n + "'");
            }
        }
    }
    const std::size_t n = names_.size();
    for (auto& e : edges_) {
        if (e.i >= n || e.j >= n) {
            throw DataError("graph: edge endpoint out of range");
        }
        if (e.i == e.j) {
            throw DataError("graph: self-loop on '" + names_[e.i] + "'");
        }
        if (!std::isfinite(e.weight) || e.weight <= 0.0) {
            throw DataError("graph: edge " + names_[e.i] + "-" + names_[e.j] + " has non-positive or non-finite weight");
        }
        if (e.i > e.j) {
            std::swap(e.i, e.j);
        }
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    for (std::size_t k = 1; k < edges_.size(); ++k) {
        if (edges_[k].i == edges_[k - 1].i && edges_[k].j == edges_[k - 1].j) {
            throw DataError("graph: duplicate edge " + names_[edges_[k].i] + "-" + names_[edges_[k].j]);
        }
    }
    std::sort(meta_.flagged_nodes.begin(), meta_.flagged_nodes.end());

    std::vector<std::size_t> count(n, 0);
    for (const auto& e : edges_) {
        ++count[e.i];
        ++count[e.j];
    }
    offsets_.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
        offsets_[v + 1] = offsets_[v] + count[v];
    }
    adjacency_.resize(offsets_[n]);
    degree_.assign(n, 0.0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (const auto& e : edges_) {
        adjacency_[fill[e.i]++] = {e.j, e.weight};
        adjacency_[fill[e.j]++] = {e.i, e.weight};
        degree_[e.i] += e.weight;
        degree_[e.j] += e.weight;
        total_weight_ += e.weight;
    }
    for (std::size_t v = 0; v < n; ++v) {
        std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v]),
                  adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[v + 1]),
                  [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
    }
}

std::optional<std::size_t> FeatureGraph::node_index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names_.begin());
}

FeatureGraph FeatureGraph::with_node_attrs(Matrix attrs) const {
    if (attrs.rows() != num_nodes()) {
        throw DataError("graph: node attribute rows do not match node count");
    }
    FeatureGraph g = *this;
    g.attrs_ = std::move(attrs);
    return g;
}

FeatureGraph FeatureGraph::induced(std::span<const std::size_t> nodes) const {
    std::vector<std::ptrdiff_t> remap(num_nodes(), -1);
    std::vector<std::string> names;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (remap[nodes[k]] != -1) {
            throw DataError("graph: node listed twice in induced subgraph");
        }
        remap[nodes[k]] = static_cast<std::ptrdiff_t>(k);
        names.push_back(names_[nodes[k]]);
    }
    std::vector<Edge> edges;
    for (const auto& e : edges_) {
        if (remap[e.i] >= 0 && remap[e.j] >= 0) {
            edges.push_back({static_cast<std::size_t>(remap[e.i]), static_cast<std::size_t>(remap[e.j]), e.weight});
        }
    }
    GraphMeta meta{meta_.method + "+induced", meta_.params, {}};
    for (std::size_t f : meta_.flagged_nodes) {
        if (remap[f] >= 0) {
            meta.flagged_nodes.push_back(static_cast<std::size_t>(remap[f]));
        }
    }
    FeatureGraph g(std::move(names), std::move(edges), std::move(meta));
    if (attrs_) {
        Matrix a(nodes.size(), attrs_->cols());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            std::copy(attrs_->row(nodes[k]).begin(), attrs_->row(nodes[k]).end(), a.row(k).begin());
        }
        g.attrs_ = std::move(a);
    }
    return g;
}

void write_edge_list(std::ostream& out, const FeatureGraph& g) {
    out << "source,target,weight\n";
    for (const auto& e : g.edges()) {
        out << g.node_names()[e.i] << ',' << g.node_names()[e.j] << ',' << format_double(e.weight) << '\n';
    }
}

void write_node_order(std::ostream& out, const FeatureGraph& g) {
    out << "node\n";
    for (const auto& n : g.node_names()) {
        out << n << '\n';
    }
}

std::vector<std::string> read_node_order(std::istream& in) {
    auto lines = read_lines(in);
    if (lines.empty() || trim(lines[0]) != "node") {
        throw DataError("node-order file must start with a 'node' header");
    }
    std::vector<std::string> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        out.push_back(trim(lines[i]));
    }
    return out;
}

FeatureGraph read_edge_list(std::istream& in, const std::optional<std::vector<std::string>>& nodes) {
    const auto lines = read_lines(in);
    if (lines.empty()) {
        throw DataError("edge list is empty");
    }
    struct RawEdge {
        std::string a, b;
        double w;
    };
    std::vector<RawEdge> raw;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (trim(lines[r]).empty()) {
            continue;
        }
        const auto f = split_csv_line(lines[r]);
        if (f.size() != 3) {
            throw DataError("edge list: row " + std::to_string(r + 1) + " must be source,target,weight");
        }
        const auto w = parse_double(f[2]);
        if (!w) {
            throw DataError("edge list: bad weight '" + f[2] + "' at row " + std::to_string(r + 1));
        }
        if (*w <= 0.0) {
            throw DataError("edge list: non-positive weight at row " + std::to_string(r + 1));
        }
        raw.push_back({trim(f[0]), trim(f[1]), *w});
    }

    std::vector<std::string> names;
    if (nodes) {
        names = *nodes;
    } else {
        std::set<std::string> all;
        for (const auto& e : raw) {
            all.insert(e.a);
            all.insert(e.b);
        }
        names.assign(all.begin(), all.end());
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < names.size(); ++k) {
        index.emplace(names[k], k);
    }
    std::map<std::pair<std::size_t, std::size_t>, double> unique;
    for (const auto& e : raw) {
        auto ia = index.find(e.a);
        auto ib = index.find(e.b);
        if (ia == index.end() || ib == index.end()) {
            throw DataError("edge list: unknown node '" + (ia == index.end() ? e.a : e.b) + "'");
        }
        if (ia->second == ib->second) {
            throw DataError("edge list: self-loop on '" + e.a + "'");
        }
        const auto key = std::minmax(ia->second, ib->second);
        auto [it, inserted] = unique.emplace(std::pair{key.first, key.second}, e.w);
        if (!inserted && it->second != e.w) {
            throw DataError("edge list: pair " + e.a + "-" + e.b + " listed with different weights");
        }
    }
    std::vector<Edge> edges;
    edges.reserve(unique.size());
    for (const auto& [key, w] : unique) {
        edges.push_back({key.first, key.second, w});
    }
    return FeatureGraph(std::move(names), std::move(edges), GraphMeta{"import", {}, {}});
}

std::filesystem::path node_order_path(const std::filesystem::path& edge_list) {
    auto p = edge_list;
    p.replace_filename(edge_list.stem().string() + ".nodes.csv");
    return p;
}

void save_graph(const std::filesystem::path& edge_list, const FeatureGraph& g) {
    std::ofstream out(edge_list, std::ios::binary);
    std::ofstream nodes(node_order_path(edge_list), std::ios::binary);
    if (!out || !nodes) {
        throw DataError("cannot write graph to " + edge_list.string());
    }
    write_edge_list(out, g);
    write_node_order(nodes, g);
}

FeatureGraph load_graph(const std::filesystem::path& edge_list,
                        const std::optional<std::filesystem::path>& node_order) {
    std::ifstream in(edge_list);
    if (!in) {
        throw DataError("cannot open " + edge_list.string());
    }
    std::optional<std::vector<std::string>> nodes;
    const auto order = node_order ? *node_order : node_order_path(edge_list);
    if (std::filesystem::exists(order)) {
        std::ifstream nin(order);
        nodes = read_node_order(nin);
    } else if (node_order) {
        throw DataError("cannot open " + order.string());
    }
    return read_edge_list(in, nodes);
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

void write_graphml(std::ostream& out, const FeatureGraph& g) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
        << "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"double\"/>\n";
    const std::size_t n_attrs = g.node_attrs() ? g.node_attrs()->cols() : 0;
    for (std::size_t a = 0; a < n_attrs; ++a) {
        out << "  <key id=\"attr" << a << "\" for=\"node\" attr.name=\"attr" << a << "\" attr.type=\"double\"/>\n";
    }
    out << "  <graph id=\"G\" edgedefault=\"undirected\">\n";
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        out << "    <node id=\"" << xml_escape(g.node_names()[v]) << "\"";
        if (n_attrs == 0) {
            out << "/>\n";
            continue;
        }
        out << ">\n";
        for (std::size_t a = 0; a < n_attrs; ++a) {
            out << "      <data key=\"attr" << a << "\">" << format_double((*g.node_attrs())(v, a)) << "</data>\n";
        }
        out << "    </node>\n";
    }
    for (const auto& e : g.edges()) {
        out << "    <edge source=\"" << xml_escape(g.node_names()[e.i]) << "\" target=\""
            << xml_escape(g.node_names()[e.j]) << "\"><data key=\"weight\">" << format_double(e.weight)
            << "</data></edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
}

} // namespace omicsnet
