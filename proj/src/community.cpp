#include "omicsnet/community.hpp"

#include "omicsnet/errors.hpp"
#include "omicsnet/featselect.hpp"
#include "omicsnet/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <unordered_map>

namespace omicsnet {

std::size_t Partition::num_communities() const {
    if (assignment.empty()) {
        return 0;
    }
    return *std::max_element(assignment.begin(), assignment.end()) + 1;
}

std::vector<std::size_t> canonical_labels(std::span<const std::size_t> labels) {
    std::unordered_map<std::size_t, std::size_t> remap;
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto [it, _] = remap.emplace(labels[i], remap.size());
        out[i] = it->second;
    }
    return out;
}

double modularity(const FeatureGraph& g, std::span<const std::size_t> assignment, double resolution) {
    if (assignment.size() != g.num_nodes()) {
        throw DataError("modularity: partition does not cover every node");
    }
    const double w = g.total_weight();
    if (w <= 0.0) {
        throw DataError("modularity undefined on a graph without edges");
    }
    const std::size_t c = assignment.empty() ? 0 : *std::max_element(assignment.begin(), assignment.end()) + 1;
    std::vector<double> intra(c, 0.0), degree(c, 0.0);
    for (const auto& e : g.edges()) {
        if (assignment[e.i] == assignment[e.j]) {
            intra[assignment[e.i]] += e.weight;
        }
    }
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        degree[assignment[v]] += g.weighted_degree(v);
    }
    double q = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
        const double frac = degree[k] / (2.0 * w);
        q += intra[k] / w - resolution * frac * frac;
    }
    return q;
}

namespace {

/// Level graph used during Louvain; self-loop weight holds twice the
/// internal weight of a merged community (full symmetric-matrix convention).
struct LevelGraph {
    std::vector<std::vector<Neighbor>> adj; // no self entries
    std::vector<double> self_loop;
    std::vector<double> degree;
    double two_m = 0.0;

    std::size_t size() const { return adj.size(); }
};

LevelGraph from_feature_graph(const FeatureGraph& g) {
    LevelGraph lg;
    lg.adj.resize(g.num_nodes());
    lg.self_loop.assign(g.num_nodes(), 0.0);
    lg.degree.assign(g.num_nodes(), 0.0);
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        for (const auto& nb : g.neighbors(v)) {
            lg.adj[v].push_back(nb);
        }
        lg.degree[v] = g.weighted_degree(v);
        lg.two_m += lg.degree[v];
    }
    return lg;
}

/// One local-moving phase. Returns true when any node changed community.
bool local_moves(const LevelGraph& lg, std::vector<std::size_t>& community, double resolution, std::mt19937_64& rng) {
    const std::size_t n = lg.size();
    std::vector<double> tot(n, 0.0);
    for (std::size_t v = 0; v < n; ++v) {
        tot[community[v]] += lg.degree[v];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<double> link(n, 0.0);
    std::vector<std::size_t> touched;
    bool any_move = false;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t v : order) {
            const std::size_t own = community[v];
            touched.clear();
            for (const auto& nb : lg.adj[v]) {
                const std::size_t c = community[nb.node];
                if (link[c] == 0.0) {
                    touched.push_back(c);
                }
                link[c] += nb.weight;
            }
            tot[own] -= lg.degree[v];
            // gain of inserting v into c, up to a positive constant: k_v,in(c) - res * tot(c) * k_v / 2m
            const double kv = lg.degree[v];
            auto gain = [&](std::size_t c) { return link[c] - resolution * tot[c] * kv / lg.two_m; };
            std::size_t best = own;
            double best_gain = gain(own);
            std::sort(touched.begin(), touched.end());
            for (std::size_t c : touched) {
                const double gc = gain(c);
                if (gc > best_gain + 1e-12) {
                    best = c;
                    best_gain = gc;
                }
            }
            tot[best] += lg.degree[v];
            if (best != own) {
                community[v] = best;
                improved = true;
                any_move = true;
            }
            for (std::size_t c : touched) {
                link[c] = 0.0;
            }
            link[own] = 0.0;
        }
    }
    return any_move;
}

LevelGraph aggregate(const LevelGraph& lg, const std::vector<std::size_t>& community, std::size_t n_comm) {
    LevelGraph out;
    out.adj.resize(n_comm);
    out.self_loop.assign(n_comm, 0.0);
    out.degree.assign(n_comm, 0.0);
    out.two_m = lg.two_m;
    std::vector<std::map<std::size_t, double>> links(n_comm);
    for (std::size_t v = 0; v < lg.size(); ++v) {
        const std::size_t cv = community[v];
        out.self_loop[cv] += lg.self_loop[v];
        out.degree[cv] += lg.degree[v];
        for (const auto& nb : lg.adj[v]) {
            const std::size_t cu = community[nb.node];
            if (cu == cv) {
                out.self_loop[cv] += nb.weight;
            } else {
                links[cv][cu] += nb.weight;
            }
        }
    }
    for (std::size_t c = 0; c < n_comm; ++c) {
        for (const auto& [d, w] : links[c]) {
            out.adj[c].push_back({d, w});
        }
    }
    return out;
}

} // namespace

Partition louvain(const FeatureGraph& g, std::uint64_t seed, double resolution) {
    if (g.num_edges() == 0) {
        throw DataError("louvain needs a graph with at least one edge");
    }
    if (!(resolution > 0.0)) {
        throw ConfigError("louvain: resolution must be positive");
    }
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> node_comm(g.num_nodes());
    std::iota(node_comm.begin(), node_comm.end(), std::size_t{0});

    Partition p;
    p.method = "louvain";
    p.level_modularity.push_back(modularity(g, node_comm, resolution));

    LevelGraph lg = from_feature_graph(g);
    while (true) {
        std::vector<std::size_t> community(lg.size());
        std::iota(community.begin(), community.end(), std::size_t{0});
        if (!local_moves(lg, community, resolution, rng)) {
            break;
        }
        const auto relabeled = canonical_labels(community);
        const std::size_t n_comm = *std::max_element(relabeled.begin(), relabeled.end()) + 1;
        for (auto& c : node_comm) {
            c = relabeled[c];
        }
        p.level_modularity.push_back(modularity(g, node_comm, resolution));
        if (n_comm == lg.size()) {
            break;
        }
        lg = aggregate(lg, relabeled, n_comm);
    }
    p.assignment = canonical_labels(node_comm);
    p.modularity = modularity(g, p.assignment, resolution);
    return p;
}

PprVector personalized_pagerank(const FeatureGraph& g, std::span<const double> seed, const PprOptions& opts) {
    const std::size_t n = g.num_nodes();
    if (seed.size() != n) {
        throw DataError("personalized_pagerank: seed vector length does not match node count");
    }
    if (!(opts.damping > 0.0 && opts.damping < 1.0)) {
        throw ConfigError("personalized_pagerank: damping must lie in (0, 1)");
    }
    double seed_sum = 0.0;
    for (double s : seed) {
        if (s < 0.0 || !std::isfinite(s)) {
            throw DataError("personalized_pagerank: seed weights must be finite and non-negative");
        }
        seed_sum += s;
    }
    if (std::abs(seed_sum - 1.0) > 1e-9) {
        throw DataError("personalized_pagerank: seed weights must sum to 1");
    }
    PprVector out;
    out.seed.assign(seed.begin(), seed.end());
    out.damping = opts.damping;
    std::vector<double> p(out.seed);
    std::vector<double> next(n);
    const double d = opts.damping;
    for (std::size_t it = 1; it <= opts.max_iter; ++it) {
        double dangling = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            if (g.weighted_degree(v) == 0.0) {
                dangling += p[v];
            }
        }
        for (std::size_t v = 0; v < n; ++v) {
            next[v] = (1.0 - d) * out.seed[v] + d * dangling * out.seed[v];
        }
        // pull form: next[v] += d * sum_u p[u] * w(u,v) / deg(u); neighbours visited in index order
        for (std::size_t v = 0; v < n; ++v) {
            double in = 0.0;
            for (const auto& nb : g.neighbors(v)) {
                in += p[nb.node] * nb.weight / g.weighted_degree(nb.node);
            }
            next[v] += d * in;
        }
        double change = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            change += std::abs(next[v] - p[v]);
        }
        p.swap(next);
        out.iterations = it;
        out.residual = change;
        if (change < opts.tol) {
            out.scores = std::move(p);
            return out;
        }
    }
    throw PprConvergenceError("personalized_pagerank did not converge in " + std::to_string(opts.max_iter) +
                                  " iterations (last L1 change " + format_double(out.residual) + ")",
                              out.residual);
}

std::vector<std::size_t> mass_cut(const FeatureGraph& g, std::span<const double> scores, double mass_fraction) {
    if (!(mass_fraction > 0.0 && mass_fraction <= 1.0)) {
        throw ConfigError("mass_fraction must lie in (0, 1]");
    }
    std::vector<std::size_t> order;
    for (std::size_t v = 0; v < scores.size(); ++v) {
        if (scores[v] > 0.0) {
            order.push_back(v);
        }
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) {
            return scores[a] > scores[b];
        }
        return g.node_names()[a] < g.node_names()[b];
    });
    if (mass_fraction >= 1.0) {
        return order;
    }
    std::vector<std::size_t> kept;
    double mass = 0.0;
    for (std::size_t v : order) {
        kept.push_back(v);
        mass += scores[v];
        if (mass >= mass_fraction) {
            break;
        }
    }
    return kept;
}

HybridResult hybrid_ppr_louvain(const FeatureGraph& g, const OmicsMatrix& x, const PhenotypeVector& y,
                                double mass_fraction, std::uint64_t seed, const PprOptions& opts, double resolution) {
    if (x.n_subjects() != y.size()) {
        throw DataError("hybrid_ppr_louvain: phenotype is not aligned with the matrix");
    }
    std::vector<double> weights(g.num_nodes());
    double total = 0.0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
        const auto col = x.feature_index(g.node_names()[v]);
        if (!col) {
            throw DataError("hybrid_ppr_louvain: node '" + g.node_names()[v] + "' is not a matrix feature");
        }
        weights[v] = phenotype_association(x.values.col(*col), y);
        total += weights[v];
    }
    if (total == 0.0) {
        throw DataError("hybrid_ppr_louvain: no feature correlates with the phenotype; nothing to seed");
    }
    for (auto& w : weights) {
        w /= total;
    }
    HybridResult out;
    out.ppr = personalized_pagerank(g, weights, opts);
    out.retained = mass_cut(g, out.ppr.scores, mass_fraction);
    for (std::size_t v : out.retained) {
        out.retained_mass += out.ppr.scores[v];
    }
    out.subgraph = g.induced(out.retained);
    if (out.subgraph.num_edges() == 0) {
        // nothing to optimize: every retained node is its own module
        out.partition.assignment.resize(out.retained.size());
        std::iota(out.partition.assignment.begin(), out.partition.assignment.end(), std::size_t{0});
        out.partition.method = "hybrid_ppr_louvain";
        out.partition.modularity = 0.0;
        return out;
    }
    out.partition = louvain(out.subgraph, seed, resolution);
    out.partition.method = "hybrid_ppr_louvain";
    return out;
}

double adjusted_rand_index(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    if (a.size() != b.size() || a.empty()) {
        throw DataError("adjusted_rand_index: label vectors must be non-empty and equally long");
    }
    std::map<std::pair<std::size_t, std::size_t>, double> table;
    std::map<std::size_t, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto pairs = [](double n) { return n * (n - 1.0) / 2.0; };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [_, n] : table) {
        sum_ij += pairs(n);
    }
    for (const auto& [_, n] : rows) {
        sum_a += pairs(n);
    }
    for (const auto& [_, n] : cols) {
        sum_b += pairs(n);
    }
    const double expected = sum_a * sum_b / pairs(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) {
        return 1.0;
    }
    return (sum_ij - expected) / (max_index - expected);
}

void write_partition_csv(std::ostream& out, const FeatureGraph& g, const Partition& p) {
    out << "node,community\n";
    for (std::size_t v = 0; v < p.assignment.size(); ++v) {
        out << g.node_names()[v] << ',' << p.assignment[v] << '\n';
    }
}

void write_ppr_csv(std::ostream& out, const FeatureGraph& g, std::span<const double> scores) {
    out << "node,score\n";
    for (std::size_t v = 0; v < scores.size(); ++v) {
        out << g.node_names()[v] << ',' << format_double(scores[v]) << '\n';
    }
}

} // namespace omicsnet
