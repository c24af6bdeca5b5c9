// SPDX-License-Identifier: Apache-2.0
#include "dtloc/raytrace.hpp"

#include "json_util.hpp"

#include <istream>
#include <ostream>

namespace dtloc {

using nlohmann::json;
using detail::field;

namespace {

json point(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 to_point(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected [x, y, z]");
  return {detail::as<double>(j[0], path), detail::as<double>(j[1], path),
          detail::as<double>(j[2], path)};
}

} // namespace

void write_pathsets(std::ostream &out, const std::vector<PathSet> &sets) {
  for (std::size_t p = 0; p < sets.size(); ++p) {
    const auto &set = sets[p];
    json paths = json::array();
    for (const auto &path : set.paths) {
      json pts = json::array();
      for (const auto &v : path.points) pts.push_back(point(v));
      paths.push_back({{"gain_db", path.gain_db},
                       {"phase_rad", path.phase_rad},
                       {"delay_s", path.delay_s},
                       {"aod_az_deg", path.aod_az_deg},
                       {"aod_el_deg", path.aod_el_deg},
                       {"aoa_az_deg", path.aoa_az_deg},
                       {"aoa_el_deg", path.aoa_el_deg},
                       {"bounces", path.bounces},
                       {"faces", path.faces},
                       {"points", std::move(pts)}});
    }
    json line{{"position_index", p},
              {"tx", point(set.tx)},
              {"rx", point(set.rx)},
              {"paths", std::move(paths)}};
    out << line.dump() << '\n';
  }
}

std::vector<PathSet> read_pathsets(std::istream &in) {
  std::vector<PathSet> sets;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error &e) {
      throw ParseError(where + ": " + e.what());
    }
    PathSet set;
    set.tx = to_point(detail::member(j, "tx", where), where + ".tx");
    set.rx = to_point(detail::member(j, "rx", where), where + ".rx");
    const json &paths = detail::member(j, "paths", where);
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const json &jp = paths[i];
      const std::string pp = where + ".paths[" + std::to_string(i) + "]";
      Path path;
      path.gain_db = field<double>(jp, "gain_db", pp);
      path.phase_rad = field<double>(jp, "phase_rad", pp);
      path.delay_s = field<double>(jp, "delay_s", pp);
      path.aod_az_deg = field<double>(jp, "aod_az_deg", pp);
      path.aod_el_deg = field<double>(jp, "aod_el_deg", pp);
      path.aoa_az_deg = field<double>(jp, "aoa_az_deg", pp);
      path.aoa_el_deg = field<double>(jp, "aoa_el_deg", pp);
      path.bounces = field<int>(jp, "bounces", pp);
      if (jp.contains("faces")) path.faces = field<std::vector<int>>(jp, "faces", pp);
      if (jp.contains("points")) {
        for (const auto &v : jp.at("points")) path.points.push_back(to_point(v, pp + ".points"));
      }
      set.paths.push_back(std::move(path));
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

} // namespace dtloc
