#include "rss/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "rss/error.hpp"

namespace rss::io {

namespace {

using json = nlohmann::json;

constexpr std::array<char, 4> kMagic{'R', 'S', 'S', '1'};

void put_u64_le(std::string& buf, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
void put_u32_le(std::string& buf, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) buf.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
std::uint64_t get_u64_le(const char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= std::uint64_t{static_cast<unsigned char>(p[b])} << (8 * b);
  return v;
}
std::uint32_t get_u32_le(const char* p) {
  std::uint32_t v = 0;
  for (int b = 0; b < 4; ++b) v |= std::uint32_t{static_cast<unsigned char>(p[b])} << (8 * b);
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

template <typename T>
T parse_number(const std::string& s, const fs::path& file) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error("malformed number '" + s + "' in " + file.string());
  }
  return v;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file, const std::string& header) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty CSV " + file.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) throw Error("unexpected CSV header in " + file.string() + ": " + line);
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split(line, ','));
  }
  return rows;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << v;
  return ss.str();
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw Error("cannot format double");
  return std::string(buf.data(), ptr);
}

void save_dataset(const Dataset& d, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

  json manifest;
  manifest["format"] = "RSSD";
  manifest["version"] = 1;
  manifest["n"] = d.n();
  manifest["p"] = d.p();
  manifest["dtype"] = "f64le";
  manifest["layout"] = "row-major";
  std::vector<int> labels(d.y().data(), d.y().data() + d.y().size());
  manifest["labels"] = labels;
  if (d.geometry()) {
    const auto& dims = d.geometry()->dims();
    manifest["grid_dims"] = {dims[0], dims[1], dims[2]};
  } else {
    manifest["grid_dims"] = nullptr;
  }

  std::string blob(kMagic.begin(), kMagic.end());
  blob.reserve(4 + static_cast<std::size_t>(d.n() * d.p()) * 8);
  const auto& X = d.X();
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) put_u64_le(blob, std::bit_cast<std::uint64_t>(X(i, j)));
  }
  write_file(dir / "X.bin", blob);

  if (d.geometry()) {
    std::string mask;
    mask.reserve(d.geometry()->size() * 12);
    for (const auto& c : d.geometry()->mask()) {
      put_u32_le(mask, static_cast<std::uint32_t>(c.x));
      put_u32_le(mask, static_cast<std::uint32_t>(c.y));
      put_u32_le(mask, static_cast<std::uint32_t>(c.z));
    }
    write_file(dir / "mask.bin", mask);
  } else if (fs::exists(dir / "mask.bin")) {
    fs::remove(dir / "mask.bin");
  }
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw Error("missing dataset manifest: " + (dir / "manifest.json").string());
  }
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw Error(std::string("malformed manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "RSSD") throw Error("magic mismatch: manifest format is not RSSD");
  if (manifest.value("version", 0) != 1) throw Error("unsupported container version");
  if (manifest.value("dtype", "") != "f64le" || manifest.value("layout", "") != "row-major") {
    throw Error("unsupported dtype or layout");
  }
  const auto n = manifest.at("n").get<std::int64_t>();
  const auto p = manifest.at("p").get<std::int64_t>();
  if (n < 0 || p < 0) throw Error("dimension mismatch: negative sizes");
  const auto labels = manifest.at("labels").get<std::vector<int>>();
  if (static_cast<std::int64_t>(labels.size()) != n) {
    throw Error("dimension mismatch: manifest n does not match label count");
  }
  for (int l : labels) {
    if (l != 1 && l != -1) throw Error("label domain violated: labels must be +1/-1");
  }

  const auto blob = read_file(dir / "X.bin");
  if (blob.size() < 4 || !std::equal(kMagic.begin(), kMagic.end(), blob.begin())) {
    throw Error("magic mismatch: X.bin does not start with RSS1");
  }
  if (blob.size() != 4 + static_cast<std::size_t>(n * p) * 8) {
    throw Error("dimension mismatch: X.bin holds " + std::to_string((blob.size() - 4) / 8) +
                " values, manifest expects " + std::to_string(n * p));
  }
  RowMatrix X(n, p);
  const char* ptr = blob.data() + 4;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j, ptr += 8) X(i, j) = std::bit_cast<double>(get_u64_le(ptr));
  }
  if (!X.allFinite()) throw Error("X.bin contains NaN or Inf");

  Labels y(n);
  for (Index i = 0; i < n; ++i) y[i] = labels[static_cast<std::size_t>(i)];

  std::optional<GridGeometry> geometry;
  if (!manifest.at("grid_dims").is_null()) {
    const auto dims = manifest.at("grid_dims").get<std::vector<std::int32_t>>();
    if (dims.size() != 3) throw Error("grid_dims must have three entries");
    if (!fs::exists(dir / "mask.bin")) throw Error("grid_dims present but mask.bin missing");
    const auto mask_bytes = read_file(dir / "mask.bin");
    if (mask_bytes.size() != static_cast<std::size_t>(p) * 12) {
      throw Error("dimension mismatch: mask.bin does not hold p coordinates");
    }
    std::vector<Coord> mask(static_cast<std::size_t>(p));
    for (std::size_t j = 0; j < mask.size(); ++j) {
      const char* m = mask_bytes.data() + 12 * j;
      mask[j] = Coord{static_cast<std::int32_t>(get_u32_le(m)),
                      static_cast<std::int32_t>(get_u32_le(m + 4)),
                      static_cast<std::int32_t>(get_u32_le(m + 8))};
    }
    geometry.emplace(GridDims{dims[0], dims[1], dims[2]}, std::move(mask));
  }
  return Dataset(std::move(X), std::move(y), std::move(geometry));
}

Parcellation load_parcellation(const fs::path& csv) {
  const auto rows = read_csv(csv, "feature,cluster");
  std::vector<std::int32_t> assignment(rows.size(), -1);
  std::int32_t q = 0;
  for (const auto& r : rows) {
    if (r.size() != 2) throw Error("malformed parcellation row in " + csv.string());
    const auto j = parse_number<std::int64_t>(r[0], csv);
    const auto g = parse_number<std::int32_t>(r[1], csv);
    if (j < 0 || j >= static_cast<std::int64_t>(rows.size()) || assignment[static_cast<std::size_t>(j)] != -1) {
      throw Error("parcellation: feature index out of range or repeated");
    }
    assignment[static_cast<std::size_t>(j)] = g;
    q = std::max(q, g + 1);
  }
  return Parcellation(std::move(assignment), q);
}

void save_parcellation(const Parcellation& parc, const fs::path& csv) {
  std::string out = "feature,cluster\n";
  for (std::size_t j = 0; j < parc.p(); ++j) {
    out += std::to_string(j) + "," + std::to_string(parc[j]) + "\n";
  }
  write_file(csv, out);
}

std::vector<std::int32_t> load_ground_truth(const fs::path& csv) {
  const auto rows = read_csv(csv, "feature,planted_cluster");
  std::vector<std::int32_t> cluster_of(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != 2 || parse_number<std::int64_t>(rows[j][0], csv) != static_cast<std::int64_t>(j)) {
      throw Error("malformed ground truth row in " + csv.string());
    }
    cluster_of[j] = parse_number<std::int32_t>(rows[j][1], csv);
    if (cluster_of[j] < 0) throw Error("ground truth: negative cluster id");
  }
  return cluster_of;
}

void save_ground_truth(const std::vector<std::int32_t>& cluster_of, const fs::path& csv) {
  std::string out = "feature,planted_cluster\n";
  for (std::size_t j = 0; j < cluster_of.size(); ++j) {
    out += std::to_string(j) + "," + std::to_string(cluster_of[j]) + "\n";
  }
  write_file(csv, out);
}

namespace {

std::string coord_prefix(const Dataset& d, std::size_t j) {
  if (!d.geometry()) return std::to_string(j) + ",-1,-1,-1,";
  const auto& c = d.geometry()->mask()[j];
  return std::to_string(j) + "," + std::to_string(c.x) + "," + std::to_string(c.y) + "," +
         std::to_string(c.z) + ",";
}

}  // namespace

void save_scores(const StabilityScores& s, const Dataset& d, const fs::path& csv) {
  if (static_cast<Index>(s.counts.size()) != d.p()) throw Error("scores length differs from p");
  std::string out = "feature,x,y,z,count,score\n";
  const auto norm = s.normalized();
  for (std::size_t j = 0; j < s.counts.size(); ++j) {
    out += coord_prefix(d, j) + std::to_string(s.counts[j]) + "," + format_double(norm[j]) + "\n";
  }
  write_file(csv, out);
}

void save_real_scores(const std::vector<double>& scores, const Dataset& d, const fs::path& csv) {
  if (static_cast<Index>(scores.size()) != d.p()) throw Error("scores length differs from p");
  std::string out = "feature,x,y,z,count,score\n";
  for (std::size_t j = 0; j < scores.size(); ++j) {
    out += coord_prefix(d, j) + "-1," + format_double(scores[j]) + "\n";
  }
  write_file(csv, out);
}

std::vector<double> load_score_column(const fs::path& csv) {
  const auto rows = read_csv(csv, "feature,x,y,z,count,score");
  std::vector<double> out(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != 6) throw Error("malformed scores row in " + csv.string());
    out[j] = parse_number<double>(rows[j][5], csv);
  }
  return out;
}

std::string file_checksum(const fs::path& file) { return hex16(fnv1a(read_file(file))); }

std::string container_checksum(const fs::path& dir) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char* name : {"manifest.json", "X.bin", "mask.bin"}) {
    if (fs::exists(dir / name)) h = fnv1a(read_file(dir / name), h);
  }
  return hex16(h);
}

}  // namespace rss::io
