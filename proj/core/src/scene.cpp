#include "otseg/scene.hpp"

#include <algorithm>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "otseg/errors.hpp"

namespace otseg {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_text(const std::string& path) {
  if (ends_with(path, ".gz")) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (!gz) throw IoError("cannot open " + path);
    std::string out;
    char buf[1 << 16];
    int got;
    while ((got = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, got);
    if (got < 0) {
      int err = 0;
      const char* msg = gzerror(gz, &err);
      std::string detail = msg ? msg : "gzread failed";
      gzclose(gz);
      throw IoError(path + ": " + detail);
    }
    gzclose(gz);
    return out;
  }
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  if (ends_with(path, ".gz")) {
    gzFile gz = gzopen(path.c_str(), "wb9");
    if (!gz) throw IoError("cannot open " + path + " for writing");
    const int wrote =
        gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
    const bool ok = wrote == static_cast<int>(content.size());
    if (gzclose(gz) != Z_OK || !ok) throw IoError("failed writing " + path);
    return;
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << content;
  if (!os) throw IoError("failed writing " + path);
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& detail) {
  throw IoError(path + ":" + std::to_string(line) + ": " + detail);
}

double parse_double(const char*& p, const std::string& path, std::size_t line,
                    const char* what) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(p, &end);
  if (end == p || errno == ERANGE || !std::isfinite(v))
    parse_fail(path, line, std::string("bad ") + what);
  p = end;
  return v;
}

long parse_long(const char*& p, const std::string& path, std::size_t line,
                const char* what) {
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(p, &end, 10);
  if (end == p || errno == ERANGE) parse_fail(path, line, std::string("bad ") + what);
  p = end;
  return v;
}

}  // namespace

Scene read_scene(const std::string& path) {
  const std::string text = read_text(path);
  std::istringstream lines(text);
  std::string line;
  if (!std::getline(lines, line) || line.empty())
    throw IoError(path + ":1: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  Scene scene;
  unsigned long long id = 0, n = 0, aux = 0, classes = 0;
  if (std::sscanf(line.c_str(), "SCENE v1 id=%llu n=%llu aux=%llu classes=%llu",
                  &id, &n, &aux, &classes) != 4)
    parse_fail(path, 1, "malformed header: '" + line + "'");
  if (n == 0) parse_fail(path, 1, "scene must contain at least one point");
  if (classes == 0) parse_fail(path, 1, "scene must declare at least one class");
  scene.id = static_cast<std::uint32_t>(id);
  scene.class_count = static_cast<std::size_t>(classes);
  scene.points = Matrix(n, 3 + aux);
  scene.labels.resize(n);

  bool planted_known = false;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t line_no = i + 2;
    if (!std::getline(lines, line))
      parse_fail(path, line_no, "unexpected end of file, expected " +
                                    std::to_string(n) + " point rows");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const char* p = line.c_str();
    auto row = scene.points.row(i);
    for (std::size_t c = 0; c < 3 + aux; ++c)
      row[c] = parse_double(p, path, line_no, c < 3 ? "coordinate" : "aux value");
    const long label = parse_long(p, path, line_no, "label");
    if (label < 0 || static_cast<unsigned long long>(label) >= classes)
      parse_fail(path, line_no, "label " + std::to_string(label) +
                                    " out of range [0," + std::to_string(classes) +
                                    ")");
    scene.labels[i] = static_cast<int>(label);

    while (*p == ' ') ++p;
    const bool has_planted = *p != '\0';
    if (!planted_known) {
      planted_known = true;
      if (has_planted) scene.planted_subclass.resize(n);
    } else if (has_planted != scene.has_planted()) {
      parse_fail(path, line_no, "inconsistent planted column: present on some "
                                "rows but not others");
    }
    if (has_planted) {
      const long planted = parse_long(p, path, line_no, "planted id");
      if (planted < 0) parse_fail(path, line_no, "negative planted id");
      scene.planted_subclass[i] = static_cast<int>(planted);
    }
    while (*p == ' ') ++p;
    if (*p != '\0') parse_fail(path, line_no, "trailing characters: '" +
                                                  std::string(p) + "'");
  }
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty())
      parse_fail(path, n + 2, "extra content after " + std::to_string(n) +
                                  " point rows");
  }
  return scene;
}

void write_scene(const Scene& scene, const std::string& path) {
  if (scene.point_count() == 0)
    throw std::invalid_argument("write_scene: empty scene");
  if (scene.points.cols() < 3)
    throw std::invalid_argument("write_scene: points need at least xyz");
  if (scene.labels.size() != scene.point_count())
    throw std::invalid_argument("write_scene: label count mismatch");
  if (scene.has_planted() && scene.planted_subclass.size() != scene.point_count())
    throw std::invalid_argument("write_scene: planted count mismatch");

  std::string out;
  out.reserve(scene.point_count() * 64);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "SCENE v1 id=%" PRIu32 " n=%zu aux=%zu classes=%zu\n",
                scene.id, scene.point_count(), scene.aux_count(),
                scene.class_count);
  out += buf;
  for (std::size_t i = 0; i < scene.point_count(); ++i) {
    const auto row = scene.points.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[c]);
      if (c) out += ' ';
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), " %d", scene.labels[i]);
    out += buf;
    if (scene.has_planted()) {
      std::snprintf(buf, sizeof(buf), " %d", scene.planted_subclass[i]);
      out += buf;
    }
    out += '\n';
  }
  write_text(path, out);
}

std::vector<Scene> load_scene_dir(const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::file_status st = fs::status(dir, ec);
  if (ec || st.type() == fs::file_type::not_found)
    throw IoError("no such file or directory: " + dir);

  std::vector<std::string> paths;
  if (fs::is_directory(st)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string name = entry.path().filename().string();
      if (ends_with(name, ".txt") || ends_with(name, ".gz"))
        paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw IoError("no scene files (*.txt, *.gz) in " + dir);
  } else {
    paths.push_back(dir);
  }

  std::vector<Scene> scenes;
  scenes.reserve(paths.size());
  for (const auto& p : paths) scenes.push_back(read_scene(p));
  return scenes;
}

}  // namespace otseg
