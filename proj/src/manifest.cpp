#include "reid/manifest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string_view>

#include "reid/error.hpp"

namespace reid {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

std::string format_real(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw DataError("cannot format real");
  return std::string(buf, ptr);
}

std::string format_inline(const Vector& features) {
  std::string out(kInlinePrefix);
  for (std::size_t i = 0; i < features.dim(); ++i) {
    if (i) out += ';';
    out += format_real(features[i]);
  }
  return out;
}

Vector parse_inline(std::string_view text) {
  if (text.starts_with(kInlinePrefix)) text.remove_prefix(kInlinePrefix.size());
  std::vector<double> values;
  while (true) {
    const auto cut = text.find(';');
    const std::string_view token = trim(text.substr(0, cut));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
      throw DataError("bad inline feature value '" + std::string(token) + "'");
    }
    if (!std::isfinite(v)) throw DataError("non-finite inline feature value");
    values.push_back(v);
    if (cut == std::string_view::npos) break;
    text.remove_prefix(cut + 1);
  }
  return Vector(std::move(values));
}

std::map<std::string, std::size_t> Manifest::counts_by_individual() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& e : entries) ++counts[e.individual_id];
  return counts;
}

void Manifest::add_inline(const Vector& features, std::string individual_id) {
  entries.push_back({format_inline(features), std::move(individual_id), features});
}

void Manifest::validate() const {
  std::set<std::string_view> paths;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.individual_id.empty()) {
      throw DataError("entry " + std::to_string(i) + " has an empty individual_id");
    }
    if (!e.is_inline() && !paths.insert(e.sample_ref).second) {
      throw DataError("duplicate sample_ref '" + e.sample_ref + "'");
    }
  }
}

Manifest parse_manifest(std::istream& in, const std::string& source) {
  Manifest manifest;
  std::set<std::string> paths;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view row = trim(line);
    if (row.empty() || row.front() == '#') continue;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (!header_seen) {
      if (row != "sample,individual_id") {
        throw DataError(where + "expected header 'sample,individual_id'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = row.find(',');
    if (comma == std::string_view::npos) throw DataError(where + "missing individual_id column");
    const std::string_view sample = trim(row.substr(0, comma));
    const std::string_view id = trim(row.substr(comma + 1));
    if (id.find(',') != std::string_view::npos) throw DataError(where + "too many columns");
    if (sample.empty()) throw DataError(where + "empty sample");
    if (id.empty()) throw DataError(where + "empty individual_id");

    ManifestEntry entry{std::string(sample), std::string(id), std::nullopt};
    if (sample.starts_with(kInlinePrefix)) {
      try {
        entry.features = parse_inline(sample);
      } catch (const DataError& e) {
        throw DataError(where + e.what());
      }
    } else if (!paths.insert(entry.sample_ref).second) {
      throw DataError(where + "duplicate sample_ref '" + entry.sample_ref + "'");
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!header_seen) throw DataError(source + ": empty manifest");
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m = parse_manifest(in, path.string());
  m.species_tag = path.stem().string();
  m.base_dir = path.parent_path();
  return m;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  out << "sample,individual_id\n";
  for (const auto& e : manifest.entries) out << e.sample_ref << ',' << e.individual_id << '\n';
}

void save_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_manifest(out, manifest);
}

}  // namespace reid
