#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "graphfilt/graph.hpp"
#include "graphfilt/io.hpp"

namespace graphfilt {

/// Parses an edge list with header `src,dst,weight`. Node count is max index + 1
/// unless `n` is given. Undirected input may list each edge once; mirrors are added.
inline Graph parse_edge_csv(const std::string& text, bool directed, bool one_based = false, std::size_t n = 0,
                            const std::string& source = "<edges>") {
    const auto csv = io::parse_csv(text, {"src", "dst", "weight"}, source);
    std::vector<Edge> edges;
    std::size_t max_index = 0;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const auto ctx = io::where(source, csv.lines[r]);
        long long s = io::parse_int(csv.rows[r][0], ctx);
        long long d = io::parse_int(csv.rows[r][1], ctx);
        const double w = io::parse_double(csv.rows[r][2], ctx);
        if (one_based) {
            --s;
            --d;
        }
        if (s < 0 || d < 0) throw Error(ErrorKind::parse, ctx + ": negative node index");
        if (!std::isfinite(w)) throw Error(ErrorKind::parse, ctx + ": non-finite weight");
        edges.push_back({static_cast<std::size_t>(s), static_cast<std::size_t>(d), w});
        max_index = std::max({max_index, static_cast<std::size_t>(s), static_cast<std::size_t>(d)});
    }
    const std::size_t nodes = n ? n : (edges.empty() ? 0 : max_index + 1);
    if (!directed) {
        std::map<std::pair<std::size_t, std::size_t>, double> w;
        for (const auto& e : edges) {
            auto [it, fresh] = w.try_emplace({e.src, e.dst}, e.weight);
            if (!fresh && it->second != e.weight)
                throw Error(ErrorKind::parse, source + ": conflicting weights for edge (" + std::to_string(e.src) +
                                                  "," + std::to_string(e.dst) + ")");
        }
        for (const auto& e : edges) {
            auto it = w.find({e.dst, e.src});
            if (it == w.end()) w[{e.dst, e.src}] = e.weight;
            else if (it->second != e.weight)
                throw Error(ErrorKind::parse, source + ": asymmetric weights for undirected edge (" +
                                                  std::to_string(e.src) + "," + std::to_string(e.dst) + ")");
        }
        edges.clear();
        for (const auto& [k, v] : w) edges.push_back({k.first, k.second, v});
    }
    return Graph(nodes, std::move(edges), directed);
}

/// Parses `id,x,y` rows; ids must cover 0..n-1 exactly once.
inline std::vector<Point2> parse_coords_csv(const std::string& text, const std::string& source = "<coords>") {
    const auto csv = io::parse_csv(text, {"id", "x", "y"}, source);
    const std::size_t n = csv.rows.size();
    std::vector<Point2> pts(n);
    std::vector<bool> seen(n, false);
    for (std::size_t r = 0; r < n; ++r) {
        const auto ctx = io::where(source, csv.lines[r]);
        const long long id = io::parse_int(csv.rows[r][0], ctx);
        if (id < 0 || static_cast<std::size_t>(id) >= n || seen[static_cast<std::size_t>(id)])
            throw Error(ErrorKind::parse, ctx + ": node id " + std::to_string(id) + " out of range or repeated");
        seen[static_cast<std::size_t>(id)] = true;
        pts[static_cast<std::size_t>(id)] = {io::parse_double(csv.rows[r][1], ctx), io::parse_double(csv.rows[r][2], ctx)};
    }
    return pts;
}

inline std::string coords_to_csv(const std::vector<Point2>& pts) {
    std::string out = "id,x,y\n";
    for (std::size_t i = 0; i < pts.size(); ++i)
        out += std::to_string(i) + "," + io::fmt(pts[i][0]) + "," + io::fmt(pts[i][1]) + "\n";
    return out;
}

inline std::string edges_to_csv(const Graph& g) {
    std::string out = "src,dst,weight\n";
    for (const auto& e : g.edges())
        out += std::to_string(e.src) + "," + std::to_string(e.dst) + "," + io::fmt(e.weight) + "\n";
    return out;
}

inline nlohmann::json graph_to_json(const Graph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : g.edges()) edges.push_back({e.src, e.dst, e.weight});
    return {{"n", g.size()}, {"directed", g.directed()}, {"edges", edges}};
}

inline Graph graph_from_json(const nlohmann::json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        const bool directed = j.at("directed").get<bool>();
        std::vector<Edge> edges;
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 3) throw Error(ErrorKind::parse, "graph edge must be [i, j, w]");
            edges.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>(), e[2].get<double>()});
        }
        return Graph(n, std::move(edges), directed);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::parse, std::string("graph JSON: ") + ex.what());
    }
}

inline Graph load_graph_json(const std::string& path) {
    const auto text = io::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::parse, path + ": " + ex.what());
    }
    return graph_from_json(j);
}

}  // namespace graphfilt
