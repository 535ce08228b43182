#include <string>

#include "json.hpp"
#include "lagflow/error.hpp"
#include "lagflow/mesh.hpp"
#include "mesh_internal.hpp"

namespace lagflow {

namespace {

using nlohmann::json;

json to_json(const Vec& v) { return json(std::vector<double>(v.begin(), v.end())); }

Vec vec_from(const json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw InvalidInput("mesh json: expected an array of " + std::to_string(dim) + " numbers");
  Vec v(dim);
  for (int a = 0; a < dim; ++a) v[a] = j.at(a).get<double>();
  return v;
}

}  // namespace

std::string mesh_to_json(const Mesh& mesh) {
  json cells = json::array();
  for (const Cell& c : mesh.cells()) {
    json geometry;
    if (c.is_box()) {
      geometry = {{"type", "box"}, {"lo", to_json(c.bbox_lo)}, {"hi", to_json(c.bbox_hi)}};
    } else {
      json simplices = json::array();
      for (const Simplex& s : c.pieces) {
        json verts = json::array();
        for (int k = 0; k <= s.dim(); ++k) verts.push_back(to_json(s.vertex(k)));
        simplices.push_back(verts);
      }
      geometry = {{"type", "simplices"}, {"simplices", simplices}};
      if (c.site >= 0) {
        geometry["site"] = c.site;
        geometry["neighbors"] = c.neighbors;
        json poly = json::array();
        for (const Vec& v : c.polygon) poly.push_back(to_json(v));
        geometry["polygon"] = poly;
      }
    }
    cells.push_back({{"id", c.id},
                     {"volume", c.volume},
                     {"diameter", c.diameter},
                     {"anchor", to_json(c.anchor.lift())},
                     {"geometry", geometry}});
  }
  json sites = json::array();
  for (const TorusPoint& p : mesh.sites()) sites.push_back(to_json(p.lift()));
  json out = {{"kind", std::string(to_string(mesh.kind()))},
              {"d", mesh.dim()},
              {"dx", mesh.dx()},
              {"resolution", mesh.resolution()},
              {"jitter", mesh.jitter()},
              {"seed", mesh.seed()},
              {"min_volume_ratio", mesh.min_volume_ratio()},
              {"sites", sites},
              {"cells", cells}};
  return out.dump();
}

Mesh mesh_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
    const MeshKind kind = parse_mesh_kind(j.at("kind").get<std::string>());
    const int dim = j.at("d").get<int>();
    static_cast<void>(Vec(dim));
    std::vector<TorusPoint> sites;
    for (const json& s : j.value("sites", json::array())) sites.push_back(wrap(vec_from(s, dim)));
    std::vector<Cell> cells;
    for (const json& jc : j.at("cells")) {
      Cell c;
      c.id = jc.at("id").get<int>();
      const json& g = jc.at("geometry");
      const std::string type = g.at("type").get<std::string>();
      if (type == "box") {
        c.bbox_lo = vec_from(g.at("lo"), dim);
        c.bbox_hi = vec_from(g.at("hi"), dim);
        c.volume = 1.0;
        Vec mid(dim);
        for (int a = 0; a < dim; ++a) {
          c.volume *= c.bbox_hi[a] - c.bbox_lo[a];
          mid[a] = 0.5 * (c.bbox_lo[a] + c.bbox_hi[a]);
        }
        c.diameter = (c.bbox_hi - c.bbox_lo).norm();
        c.anchor = wrap(mid);
      } else if (type == "simplices") {
        for (const json& js : g.at("simplices")) {
          std::vector<Vec> verts;
          for (const json& v : js) verts.push_back(vec_from(v, dim));
          c.pieces.emplace_back(dim, verts);
        }
        summarize_pieces(c, dim);
        if (g.contains("site")) {
          c.site = g.at("site").get<int>();
          c.neighbors = g.value("neighbors", std::vector<int>{});
          for (const json& v : g.value("polygon", json::array())) c.polygon.push_back(vec_from(v, dim));
          if (c.site < 0 || static_cast<std::size_t>(c.site) >= sites.size())
            throw InvalidInput("mesh json: site index out of range");
          c.anchor = sites[c.site];
        }
      } else {
        throw InvalidInput("mesh json: unknown geometry type '" + type + "'");
      }
      cells.push_back(std::move(c));
    }
    return MeshBuilder::assemble(kind, dim, j.at("resolution").get<int>(),
                                 j.value("jitter", 0.0), j.value("seed", std::uint64_t{0}),
                                 std::move(cells), std::move(sites));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("mesh json: ") + e.what());
  }
}

}  // namespace lagflow
