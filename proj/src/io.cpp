#include "pointcvar/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pcvar {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view tok, double& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  if (tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

bool parse_provenance(std::string_view tok, Provenance& out) {
  tok = trim(tok);
  if (tok == "clean" || tok == "0") {
    out = Provenance::Clean;
    return true;
  }
  if (tok == "outlier" || tok == "1") {
    out = Provenance::Outlier;
    return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PointCloud parse_cloud(const std::string& text, const std::string& source_name) {
  std::vector<Point3> pts;
  std::vector<Provenance> prov;
  int has_prov = -1;  // unknown until the first data line
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = sv.find(',', start);
      fields.push_back(sv.substr(start, comma == std::string_view::npos ? sv.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 3 && fields.size() != 4) {
      throw ParseError(source_name, line_no,
                       "expected 3 or 4 fields, got " + std::to_string(fields.size()));
    }
    const int this_prov = fields.size() == 4 ? 1 : 0;
    if (has_prov == -1) has_prov = this_prov;
    if (has_prov != this_prov) {
      throw ParseError(source_name, line_no, "provenance column present on some lines only");
    }
    Point3 p;
    double* coords[3] = {&p.x, &p.y, &p.z};
    for (int k = 0; k < 3; ++k) {
      if (!parse_double(fields[k], *coords[k])) {
        throw ParseError(source_name, line_no, "non-numeric token '" + std::string(trim(fields[k])) + "'");
      }
    }
    if (!p.finite()) throw ParseError(source_name, line_no, "non-finite coordinate");
    pts.push_back(p);
    if (has_prov == 1) {
      Provenance pv;
      if (!parse_provenance(fields[3], pv)) {
        throw ParseError(source_name, line_no, "bad provenance '" + std::string(trim(fields[3])) + "'");
      }
      prov.push_back(pv);
    }
  }
  if (pts.empty()) throw ParseError(source_name, line_no, "no points");
  if (has_prov == 1) return PointCloud(std::move(pts), std::move(prov));
  return PointCloud(std::move(pts));
}

std::string format_cloud(const PointCloud& cloud) {
  std::string out;
  out.reserve(cloud.size() * 64);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud[i];
    out += format_double(p.x);
    out += ',';
    out += format_double(p.y);
    out += ',';
    out += format_double(p.z);
    if (cloud.has_provenance()) {
      out += cloud.provenance_at(i) == Provenance::Outlier ? ",outlier" : ",clean";
    }
    out += '\n';
  }
  return out;
}

PointCloud load_cloud(const fs::path& path) {
  return parse_cloud(read_text_file(path), path.string());
}

void save_cloud(const PointCloud& cloud, const fs::path& path) {
  write_text_file(path, format_cloud(cloud));
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.path = j.at("path").get<std::string>();
      e.label = j.at("label").get<int>();
      e.split = split_from_string(j.at("split").get<std::string>());
      entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ParseError(path.string(), line_no, ex.what());
    } catch (const Error& ex) {
      throw ParseError(path.string(), line_no, ex.what());
    }
  }
  return entries;
}

void save_manifest(const std::vector<ManifestEntry>& entries, const fs::path& path) {
  std::string out;
  for (const auto& e : entries) {
    json j = {{"path", e.path}, {"label", e.label}, {"split", std::string(to_string(e.split))}};
    out += j.dump();
    out += '\n';
  }
  write_text_file(path, out);
}

void save_dataset_clouds(const Dataset& data, const fs::path& dir, const std::string& prefix,
                         std::vector<ManifestEntry>& manifest) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::string name = prefix + std::to_string(i) + ".csv";
    save_cloud(data.clouds[i], dir / name);
    manifest.push_back({name, data.clouds[i].label().value_or(0), data.split});
  }
}

void save_class_names(const std::vector<std::string>& names, const fs::path& dir) {
  write_text_file(dir / "classes.json", json(names).dump() + "\n");
}

Dataset load_dataset(const fs::path& manifest_path, Split split) {
  const fs::path dir = manifest_path.parent_path();
  Dataset ds;
  ds.split = split;
  int max_label = -1;
  for (const auto& e : load_manifest(manifest_path)) {
    if (e.split != split) continue;
    const fs::path p = fs::path(e.path).is_absolute() ? fs::path(e.path) : dir / e.path;
    PointCloud c = load_cloud(p);
    c.set_label(e.label);
    max_label = std::max(max_label, e.label);
    ds.clouds.push_back(std::move(c));
  }
  if (fs::exists(dir / "classes.json")) {
    ds.class_names = json::parse(read_text_file(dir / "classes.json")).get<std::vector<std::string>>();
  } else {
    for (int k = 0; k <= max_label; ++k) ds.class_names.push_back("class" + std::to_string(k));
  }
  ds.validate();
  return ds;
}

}  // namespace pcvar
