#include "parallax/io.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <fstream>
#include <sstream>

namespace parallax::io {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "CFL I/O assumes a little-endian host");

fs::path cfl_base(fs::path const &path)
{
  auto const ext = path.extension();
  if (ext == ".cfl" || ext == ".hdr") { return fs::path(path).replace_extension(); }
  return path;
}

namespace {

fs::path with_ext(fs::path const &base, char const *ext)
{
  auto p = base;
  p += ext;
  return p;
}

Shape shape_from_extents(std::vector<Index> const &ext)
{
  std::size_t rank = ext.size();
  while (rank > 2 && ext[rank - 1] == 1) { rank--; }
  Shape s(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(rank));
  std::reverse(s.begin(), s.end());
  return s;
}

} // namespace

std::vector<Index> read_cfl_extents(fs::path const &path)
{
  auto const hdr = with_ext(cfl_base(path), ".hdr");
  std::ifstream in(hdr);
  if (!in) { fail(ErrorCategory::MissingFile, "cannot open " + hdr.string()); }
  std::string line;
  if (!std::getline(in, line) || line.rfind("# Dimensions", 0) != 0) {
    fail(ErrorCategory::MalformedHeader, hdr.string() + ": first line must be '# Dimensions'");
  }
  if (!std::getline(in, line)) { fail(ErrorCategory::MalformedHeader, hdr.string() + ": missing extents line"); }
  std::istringstream ss(line);
  std::vector<Index> ext;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (std::exception const &) {
      used = 0;
    }
    if (used != tok.size() || v < 1) { fail(ErrorCategory::MalformedHeader, hdr.string() + ": bad extent '" + tok + "'"); }
    ext.push_back(static_cast<Index>(v));
  }
  if (ext.empty()) { fail(ErrorCategory::MalformedHeader, hdr.string() + ": no extents"); }
  return ext;
}

template <typename S> Tensor<std::complex<S>> read_cfl(fs::path const &path)
{
  auto const base = cfl_base(path);
  auto const ext = read_cfl_extents(base);
  auto const shape = shape_from_extents(ext);
  Index const n = shape_size(shape);
  auto const cfl = with_ext(base, ".cfl");
  if (!fs::exists(cfl)) { fail(ErrorCategory::MissingFile, "cannot open " + cfl.string()); }
  auto const expected = static_cast<std::uintmax_t>(n) * 8;
  auto const actual = fs::file_size(cfl);
  if (actual != expected) {
    fail(ErrorCategory::TruncatedData, cfl.string() + ": expected " + std::to_string(expected) + " bytes, found " +
                                         std::to_string(actual));
  }
  std::vector<Cxf> raw(static_cast<std::size_t>(n));
  std::ifstream in(cfl, std::ios::binary);
  in.read(reinterpret_cast<char *>(raw.data()), static_cast<std::streamsize>(expected));
  if (!in) { fail(ErrorCategory::Io, "short read from " + cfl.string()); }
  if constexpr (std::is_same_v<S, float>) {
    return Tensor<Cxf>(shape, std::move(raw));
  } else {
    return cast<std::complex<S>>(Tensor<Cxf>(shape, std::move(raw)));
  }
}

template <typename S> void write_cfl(fs::path const &path, Tensor<std::complex<S>> const &t)
{
  if (t.rank() > 5 || t.rank() < 1) { fail(ErrorCategory::InvalidInput, "CFL tensors must have 1 to 5 axes"); }
  auto const base = cfl_base(path);
  if (base.has_parent_path()) { fs::create_directories(base.parent_path()); }
  std::vector<Index> ext(t.shape().rbegin(), t.shape().rend());
  ext.resize(5, 1);
  {
    std::ofstream hdr(with_ext(base, ".hdr"));
    hdr << "# Dimensions\n";
    for (std::size_t i = 0; i < ext.size(); i++) { hdr << (i ? " " : "") << ext[i]; }
    hdr << "\n";
    if (!hdr) { fail(ErrorCategory::Io, "cannot write " + with_ext(base, ".hdr").string()); }
  }
  std::ofstream out(with_ext(base, ".cfl"), std::ios::binary);
  if constexpr (std::is_same_v<S, float>) {
    out.write(reinterpret_cast<char const *>(t.raw()), static_cast<std::streamsize>(t.size() * 8));
  } else {
    auto const f = cast<Cxf>(t);
    out.write(reinterpret_cast<char const *>(f.raw()), static_cast<std::streamsize>(f.size() * 8));
  }
  if (!out) { fail(ErrorCategory::Io, "cannot write " + with_ext(base, ".cfl").string()); }
}

template Tensor<Cx> read_cfl(fs::path const &);
template Tensor<Cxf> read_cfl(fs::path const &);
template void write_cfl(fs::path const &, Tensor<Cx> const &);
template void write_cfl(fs::path const &, Tensor<Cxf> const &);

std::uint64_t cfl_checksum(fs::path const &path)
{
  auto const cfl = with_ext(cfl_base(path), ".cfl");
  std::ifstream in(cfl, std::ios::binary);
  if (!in) { fail(ErrorCategory::MissingFile, "cannot open " + cfl.string()); }
  std::uint64_t h = 0xCBF29CE484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); i++) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ULL;
    }
  }
  return h;
}

Manifest read_manifest(fs::path const &path)
{
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (nlohmann::json::exception const &e) {
    fail(ErrorCategory::MalformedHeader, path.string() + ": " + e.what());
  }
  if (!j.contains("samples") || !j["samples"].is_array()) {
    fail(ErrorCategory::MalformedHeader, path.string() + ": manifest needs a 'samples' array");
  }
  Manifest m;
  m.directory = path.parent_path();
  for (auto const &s : j["samples"]) {
    ManifestEntry e;
    if (!s.contains("id")) { fail(ErrorCategory::MalformedHeader, path.string() + ": sample without id"); }
    e.id = s["id"].get<std::string>();
    if (s.contains("kspace_path")) {
      e.kspace_path = s["kspace_path"].get<std::string>();
    } else if (s.contains("path")) {
      e.kspace_path = s["path"].get<std::string>();
    } else {
      fail(ErrorCategory::MalformedHeader, path.string() + ": sample " + e.id + " has no k-space path");
    }
    e.image_path = s.value("image_path", std::string{});
    e.maps_path = s.value("maps_path", std::string{});
    e.seed = s.value("seed", std::uint64_t{0});
    e.contrast = s.value("contrast", std::string{});
    e.split = s.value("split", std::string{});
    e.volume = s.value("volume", Index{-1});
    m.samples.push_back(std::move(e));
  }
  if (j.contains("errors") && j["errors"].is_array()) {
    for (auto const &e : j["errors"]) { m.errors.push_back(e.is_string() ? e.get<std::string>() : e.dump()); }
  }
  return m;
}

void write_manifest(fs::path const &path, Manifest const &m)
{
  nlohmann::ordered_json j;
  auto samples = nlohmann::ordered_json::array();
  for (auto const &e : m.samples) {
    nlohmann::ordered_json s;
    s["id"] = e.id;
    s["kspace_path"] = e.kspace_path;
    s["image_path"] = e.image_path;
    s["maps_path"] = e.maps_path;
    s["seed"] = e.seed;
    s["contrast"] = e.contrast;
    s["split"] = e.split;
    s["volume"] = e.volume;
    samples.push_back(std::move(s));
  }
  j["samples"] = std::move(samples);
  j["errors"] = m.errors;
  write_text(path, j.dump(2) + "\n");
}

std::string read_text(fs::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { fail(ErrorCategory::MissingFile, "cannot open " + path.string()); }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(fs::path const &path, std::string const &text)
{
  if (path.has_parent_path()) { fs::create_directories(path.parent_path()); }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) { fail(ErrorCategory::Io, "cannot write " + path.string()); }
}

} // namespace parallax::io
