// SPDX-License-Identifier: Apache-2.0
#include "dtloc/scene.hpp"

#include "dtloc/error.hpp"
#include "json_util.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace dtloc {

using nlohmann::json;
using detail::field;

namespace {

Vec2 to_vec2(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 2) throw ParseError(path + ": expected [x, y]");
  return {detail::as<double>(j[0], path + "[0]"), detail::as<double>(j[1], path + "[1]")};
}

Vec3 to_vec3(const json &j, const std::string &path) {
  if (!j.is_array() || j.size() != 3) throw ParseError(path + ": expected [x, y, z]");
  return {detail::as<double>(j[0], path + "[0]"), detail::as<double>(j[1], path + "[1]"),
          detail::as<double>(j[2], path + "[2]")};
}

json from_vec(const Vec2 &v) { return json::array({v.x(), v.y()}); }
json from_vec(const Vec3 &v) { return json::array({v.x(), v.y(), v.z()}); }

Scene scene_from_json(const json &j) {
  if (!j.is_object()) throw ParseError("scene: expected a JSON object");
  Scene s;
  s.schema_version = field<int>(j, "schema_version", "");
  s.name = j.value("name", std::string{});
  s.carrier_hz = field<double>(j, "carrier_hz", "");
  s.bandwidth_hz = field<double>(j, "bandwidth_hz", "");
  s.subband_hz = field<double>(j, "subband_hz", "");
  s.subcarrier_hz = field<double>(j, "subcarrier_hz", "");

  const json &mats = detail::member(j, "materials", "");
  if (!mats.is_array()) throw ParseError("materials: expected an array");
  for (std::size_t i = 0; i < mats.size(); ++i) {
    const std::string p = "materials[" + std::to_string(i) + "]";
    Material m;
    m.id = field<std::string>(mats[i], "id", p);
    m.reflection_loss_db = field<double>(mats[i], "reflection_loss_db", p);
    if (mats[i].contains("relative_permittivity")) {
      m.relative_permittivity = field<double>(mats[i], "relative_permittivity", p);
    }
    if (mats[i].contains("conductivity_s_per_m")) {
      m.conductivity_s_per_m = field<double>(mats[i], "conductivity_s_per_m", p);
    }
    s.materials.push_back(std::move(m));
  }

  s.ground_material = field<std::string>(detail::member(j, "ground", ""), "material", "ground");

  const json &blds = detail::member(j, "buildings", "");
  if (!blds.is_array()) throw ParseError("buildings: expected an array");
  for (std::size_t i = 0; i < blds.size(); ++i) {
    const std::string p = "buildings[" + std::to_string(i) + "]";
    Building b;
    const json &fp = detail::member(blds[i], "footprint", p);
    if (!fp.is_array()) throw ParseError(p + ".footprint: expected an array");
    for (std::size_t v = 0; v < fp.size(); ++v) {
      b.footprint.push_back(to_vec2(fp[v], p + ".footprint[" + std::to_string(v) + "]"));
    }
    b.height = field<double>(blds[i], "height", p);
    b.material = field<std::string>(blds[i], "material", p);
    s.buildings.push_back(std::move(b));
  }

  const json &bs = detail::member(j, "base_station", "");
  s.bs.position = to_vec3(detail::member(bs, "position", "base_station"), "base_station.position");
  s.bs.tx_power_dbm = field<double>(bs, "tx_power_dbm", "base_station");
  const json &arr = detail::member(bs, "array", "base_station");
  s.bs.array.n_antennas = field<int>(arr, "n_antennas", "base_station.array");
  s.bs.array.spacing_wavelengths = field<double>(arr, "spacing_wavelengths", "base_station.array");
  s.bs.array.boresight_az_deg = field<double>(arr, "boresight_az_deg", "base_station.array");

  const json &g = detail::member(j, "grid", "");
  s.grid.origin = to_vec2(detail::member(g, "origin", "grid"), "grid.origin");
  s.grid.extent = to_vec2(detail::member(g, "extent", "grid"), "grid.extent");
  s.grid.resolution = field<double>(g, "resolution", "grid");
  s.grid.height = field<double>(g, "height", "grid");
  return s;
}

json scene_to_json(const Scene &s) {
  json j;
  j["schema_version"] = s.schema_version;
  j["name"] = s.name;
  j["carrier_hz"] = s.carrier_hz;
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["subband_hz"] = s.subband_hz;
  j["subcarrier_hz"] = s.subcarrier_hz;
  json mats = json::array();
  for (const auto &m : s.materials) {
    json jm{{"id", m.id}, {"reflection_loss_db", m.reflection_loss_db}};
    if (m.relative_permittivity) jm["relative_permittivity"] = *m.relative_permittivity;
    if (m.conductivity_s_per_m) jm["conductivity_s_per_m"] = *m.conductivity_s_per_m;
    mats.push_back(std::move(jm));
  }
  j["materials"] = std::move(mats);
  j["ground"] = {{"material", s.ground_material}};
  json blds = json::array();
  for (const auto &b : s.buildings) {
    json fp = json::array();
    for (const auto &v : b.footprint) fp.push_back(from_vec(v));
    blds.push_back({{"footprint", std::move(fp)}, {"height", b.height}, {"material", b.material}});
  }
  j["buildings"] = std::move(blds);
  j["base_station"] = {{"position", from_vec(s.bs.position)},
                       {"tx_power_dbm", s.bs.tx_power_dbm},
                       {"array",
                        {{"n_antennas", s.bs.array.n_antennas},
                         {"spacing_wavelengths", s.bs.array.spacing_wavelengths},
                         {"boresight_az_deg", s.bs.array.boresight_az_deg}}}};
  j["grid"] = {{"origin", from_vec(s.grid.origin)},
               {"extent", from_vec(s.grid.extent)},
               {"resolution", s.grid.resolution},
               {"height", s.grid.height}};
  return j;
}

} // namespace

Scene parse_scene(const std::string &text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error &e) {
    throw ParseError(std::string("scene: ") + e.what());
  }
  Scene s = scene_from_json(j);
  validate_scene(s);
  return s;
}

Scene load_scene(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_string(const Scene &scene) { return scene_to_json(scene).dump(2) + "\n"; }

void save_scene(const Scene &scene, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(path.string() + ": cannot write");
  out << scene_to_string(scene);
}

std::string scene_hash(const Scene &scene) {
  const std::string canonical = scene_to_json(scene).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(canonical.data(), canonical.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

} // namespace dtloc
