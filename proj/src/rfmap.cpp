// SPDX-License-Identifier: Apache-2.0
#include "dtloc/rfmap.hpp"

#include "dtloc/error.hpp"
#include "dtloc/parallel.hpp"
#include "dtloc/raytrace.hpp"
#include "json_util.hpp"

#include <zlib.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace dtloc {

using nlohmann::json;

namespace {

constexpr std::array<char, 8> kMagic{'D', 'T', 'R', 'F', 'M', 'A', 'P', '\0'};

void put_u32(std::string &buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(const std::string &buf, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[offset + static_cast<std::size_t>(i)]))
         << (8 * i);
  }
  return v;
}

std::uint32_t crc_of(const std::string &buf, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  const auto *data = reinterpret_cast<const Bytef *>(buf.data());
  std::size_t done = 0;
  while (done < len) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len - done, 1u << 30));
    crc = crc32(crc, data + done, chunk);
    done += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void check_codebook(const Scene &scene, const Codebook &codebook, const BuildParams &params) {
  if (codebook.n_antennas != scene.bs.array.n_antennas) {
    throw ValidationError("codebook.n_antennas", "does not match the base station array");
  }
  if (codebook.oversampling != params.oversampling) {
    throw ValidationError("codebook.oversampling", "does not match build parameters");
  }
  if (params.steps_per_dbm < 1) throw ValidationError("steps_per_dbm", "must be >= 1");
}

} // namespace

std::int32_t quantize_code(double dbm, int steps_per_dbm) {
  // nearbyint follows the default FE_TONEAREST mode: ties go to even.
  return static_cast<std::int32_t>(std::nearbyint(dbm * static_cast<double>(steps_per_dbm)));
}

RfMapDb::RfMapDb(Scene scene, BuildParams params, int n_beams, int n_subbands,
                 std::vector<std::int32_t> codes)
    : scene_(std::move(scene)), scene_hash_(dtloc::scene_hash(scene_)), grid_(generate_grid(scene_)),
      params_(params), n_beams_(n_beams), n_subbands_(n_subbands), codes_(std::move(codes)) {
  const auto per_position = static_cast<std::size_t>(n_beams_) * static_cast<std::size_t>(n_subbands_);
  if (per_position == 0 || codes_.size() % per_position != 0 ||
      codes_.size() / per_position != static_cast<std::size_t>(grid_.retained_count())) {
    throw FormatError("rf map: tensor size does not match the scene grid");
  }
  values_.resize(static_cast<Eigen::Index>(per_position), grid_.retained_count());
  double *dst = values_.data();
  for (std::size_t i = 0; i < codes_.size(); ++i) dst[i] = dequantize(codes_[i], params_.steps_per_dbm);
}

Eigen::Map<const Eigen::MatrixXd> RfMapDb::fingerprint(int position) const {
  if (position < 0 || position >= n_positions()) {
    throw std::out_of_range("position index " + std::to_string(position) + " out of range");
  }
  return {values_.col(position).data(), n_beams_, n_subbands_};
}

Eigen::Map<const Eigen::MatrixXd> RfMapDb::fingerprint_at_cell(int cell) const {
  const auto p = grid_.index_of_cell(cell);
  if (!p) throw std::out_of_range("grid cell " + std::to_string(cell) + " is masked or out of range");
  return fingerprint(*p);
}

bool RfMapDb::operator==(const RfMapDb &other) const {
  return scene_hash_ == other.scene_hash_ && params_ == other.params_ &&
         n_beams_ == other.n_beams_ && n_subbands_ == other.n_subbands_ && codes_ == other.codes_;
}

namespace {

RfMapDb assemble(const Scene &scene, const Codebook &codebook, const BuildParams &params,
                 std::size_t n_positions, int workers,
                 const std::function<PathSet(std::size_t)> &paths_of, BuildStats *stats) {
  const int n_sub = scene.n_subbands();
  const auto block = static_cast<std::size_t>(codebook.n_beams()) * static_cast<std::size_t>(n_sub);
  std::vector<std::int32_t> codes(block * n_positions);
  std::vector<std::size_t> path_counts(n_positions);
  std::vector<char> los(n_positions, 0);
  const ChannelConfig channel = params.channel();
  parallel_for(n_positions, workers, [&](std::size_t p) {
    const PathSet set = paths_of(p);
    path_counts[p] = set.paths.size();
    los[p] = !set.paths.empty() && set.paths.front().bounces == 0;
    const Eigen::MatrixXd fp = beam_rss(scene, set, codebook, channel);
    std::int32_t *dst = codes.data() + p * block;
    for (Eigen::Index i = 0; i < fp.size(); ++i) dst[i] = quantize_code(fp.data()[i], params.steps_per_dbm);
  });
  if (stats) {
    for (std::size_t p = 0; p < n_positions; ++p) {
      ++stats->path_count_histogram[path_counts[p]];
      stats->los_positions += los[p] ? 1 : 0;
    }
  }
  return RfMapDb(scene, params, codebook.n_beams(), n_sub, std::move(codes));
}

} // namespace

RfMapDb build(const Scene &scene, const PositionGrid &grid, const Codebook &codebook,
              const BuildParams &params, int workers, BuildStats *stats) {
  check_codebook(scene, codebook, params);
  const auto start = std::chrono::steady_clock::now();
  const ImageTree tree(scene, scene.bs.position, params.max_depth,
                       scene_bounds(scene, grid.positions()));
  if (stats) stats->image_tree_nodes = tree.node_count();
  RfMapDb db = assemble(
      scene, codebook, params, grid.positions().size(), workers,
      [&](std::size_t p) { return tree.trace(grid.positions()[p]); }, stats);
  if (stats) {
    stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return db;
}

RfMapDb build_from_paths(const Scene &scene, const std::vector<PathSet> &paths,
                         const Codebook &codebook, const BuildParams &params, int workers) {
  check_codebook(scene, codebook, params);
  const PositionGrid grid = generate_grid(scene);
  if (paths.size() != static_cast<std::size_t>(grid.retained_count())) {
    throw ValidationError("paths", "expected one PathSet per retained grid position");
  }
  return assemble(
      scene, codebook, params, paths.size(), workers, [&](std::size_t p) { return paths[p]; },
      nullptr);
}

void save(const RfMapDb &db, std::ostream &out) {
  const BuildParams &bp = db.params();
  json header{{"scene", scene_to_string(db.scene())},
              {"scene_hash", db.scene_hash()},
              {"codebook",
               {{"kind", "dft"}, {"n_antennas", db.n_antennas()}, {"oversampling", bp.oversampling}}},
              {"build",
               {{"max_depth", bp.max_depth},
                {"aggregation", to_string(bp.aggregation)},
                {"floor_dbm", bp.floor_dbm},
                {"steps_per_dbm", bp.steps_per_dbm}}},
              {"n_positions", db.n_positions()}};
  const std::string text = header.dump();

  std::string buf(kMagic.begin(), kMagic.end());
  put_u32(buf, kRfMapSchemaVersion);
  put_u32(buf, static_cast<std::uint32_t>(text.size()));
  buf += text;
  put_u32(buf, static_cast<std::uint32_t>(db.n_beams()));
  put_u32(buf, static_cast<std::uint32_t>(db.n_subbands()));
  put_u32(buf, static_cast<std::uint32_t>(db.n_positions()));
  buf.reserve(buf.size() + 4 * db.codes().size() + 4);
  for (std::int32_t c : db.codes()) put_u32(buf, static_cast<std::uint32_t>(c));
  put_u32(buf, crc_of(buf, buf.size()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("rf map: write failed");
}

void save(const RfMapDb &db, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write");
  save(db, out);
}

RfMapDb load(std::istream &in) {
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 16) throw TruncatedError("rf map: file shorter than its preamble");
  if (!std::equal(kMagic.begin(), kMagic.end(), buf.begin())) {
    throw FormatError("rf map: bad magic bytes");
  }
  const std::uint32_t version = get_u32(buf, 8);
  if (version != kRfMapSchemaVersion) {
    throw VersionError("rf map: schema version " + std::to_string(version) +
                       " is not supported (expected " + std::to_string(kRfMapSchemaVersion) + ")");
  }
  const std::size_t header_len = get_u32(buf, 12);
  const std::size_t dims_at = 16 + header_len;
  if (buf.size() < dims_at + 12 + 4) throw TruncatedError("rf map: truncated header");
  const std::uint64_t n_beams = get_u32(buf, dims_at);
  const std::uint64_t n_sub = get_u32(buf, dims_at + 4);
  const std::uint64_t n_pos = get_u32(buf, dims_at + 8);
  const std::uint64_t n_codes = n_beams * n_sub * n_pos;
  const std::uint64_t expected = dims_at + 12 + 4 * n_codes + 4;
  if (buf.size() < expected) throw TruncatedError("rf map: truncated tensor");
  if (buf.size() > expected) throw FormatError("rf map: trailing bytes after checksum");
  const std::size_t crc_at = static_cast<std::size_t>(expected - 4);
  if (crc_of(buf, crc_at) != get_u32(buf, crc_at)) throw ChecksumError("rf map: checksum mismatch");

  json header;
  try {
    header = json::parse(buf.substr(16, header_len));
  } catch (const json::parse_error &e) {
    throw FormatError(std::string("rf map: bad header: ") + e.what());
  }
  Scene scene;
  BuildParams bp;
  try {
    scene = parse_scene(detail::field<std::string>(header, "scene", "header"));
    const json &b = detail::member(header, "build", "header");
    bp.max_depth = detail::field<int>(b, "max_depth", "build");
    bp.aggregation = aggregation_from_string(detail::field<std::string>(b, "aggregation", "build"));
    bp.floor_dbm = detail::field<double>(b, "floor_dbm", "build");
    bp.steps_per_dbm = detail::field<int>(b, "steps_per_dbm", "build");
    bp.oversampling = detail::field<int>(detail::member(header, "codebook", "header"),
                                         "oversampling", "codebook");
  } catch (const Error &e) {
    throw FormatError(std::string("rf map: bad header: ") + e.what());
  }
  if (scene_hash(scene) != detail::field<std::string>(header, "scene_hash", "header")) {
    throw SceneMismatchError("rf map: embedded scene does not match its recorded hash");
  }

  std::vector<std::int32_t> codes(static_cast<std::size_t>(n_codes));
  for (std::size_t i = 0; i < codes.size(); ++i) {
    codes[i] = static_cast<std::int32_t>(get_u32(buf, static_cast<std::size_t>(dims_at) + 12 + 4 * i));
  }
  return RfMapDb(std::move(scene), bp, static_cast<int>(n_beams), static_cast<int>(n_sub),
                 std::move(codes));
}

RfMapDb load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(path.string() + ": cannot open");
  return load(in);
}

RfMapDb load(const std::filesystem::path &path, const Scene &expected) {
  RfMapDb db = load(path);
  if (db.scene_hash() != scene_hash(expected)) {
    throw SceneMismatchError("rf map " + path.string() + " was built from a different scene");
  }
  return db;
}

void write_rfmap_csv(const RfMapDb &db, std::ostream &out) {
  out << "beam,subband,position_index,rss_dbm\n";
  const int digits = static_cast<int>(std::ceil(std::log10(static_cast<double>(db.params().steps_per_dbm))));
  char buf[64];
  for (int p = 0; p < db.n_positions(); ++p) {
    for (int b = 0; b < db.n_subbands(); ++b) {
      for (int k = 0; k < db.n_beams(); ++k) {
        std::snprintf(buf, sizeof buf, "%.*f", digits, db.value(k, b, p));
        out << k << ',' << b << ',' << p << ',' << buf << '\n';
      }
    }
  }
}

} // namespace dtloc
